#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <limits>

#include <json.hpp>

#include "fairprep/table.hpp"

namespace fairprep {

// Estimates of one (group, stratum) cell.
struct GroupStats {
    std::string group;
    std::string stratum;
    std::size_t n = 0;
    double mu = 0;
    double sigma = 0;  // population standard deviation
};

// One GroupStats per (group, stratum) pair, strata outer and groups inner,
// labels in lexicographic order. Throws DataError naming the first empty
// cell, or on a length mismatch.
std::vector<GroupStats> group_stats(std::span<const double> estimates, std::span<const std::string> groups,
                                    std::span<const std::string> strata);

// Returned by bias_score when the spreads are zero but the means differ.
inline constexpr double kInfiniteBias = std::numeric_limits<double>::infinity();

// |mu_a - mu_b| / ((sigma_a + sigma_b) / 2); 0 when both numerator and
// denominator vanish.
double bias_score(const GroupStats& a, const GroupStats& b);

struct BiasRow {
    std::string stratum;
    GroupStats a;
    GroupStats b;
    double mu_diff = 0;
    double sigma_avg = 0;
    double score = 0;
};

struct BiasTable {
    std::string group_a;
    std::string group_b;
    std::vector<BiasRow> rows;  // one per stratum

    const BiasRow& row(std::string_view stratum) const;
};

BiasTable make_bias_table(const std::vector<GroupStats>& stats, const std::string& group_a,
                          const std::string& group_b, const std::vector<std::string>& strata);

struct Histogram {
    double lo = 0;
    double hi = 1;
    std::vector<std::size_t> counts;
    std::size_t clamped_low = 0;   // values below lo, counted in the first bin
    std::size_t clamped_high = 0;  // values above hi, counted in the last bin

    double bin_lo(std::size_t i) const;
    double bin_hi(std::size_t i) const;
};

// Equal-width bins on [lo, hi]; hi itself lands in the last bin.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

struct Performance {
    std::string metric;  // "accuracy" or "r2"
    double value = 0;
    std::string split;   // human-readable description of the evaluation rows
};

struct AuditOptions {
    std::string protected_column;
    // Stratify by this column's labels; unset means a single stratum "all".
    std::optional<std::string> stratum_column;
    // The two groups contrasted in the bias table; unset uses the protected
    // column's categories when there are exactly two.
    std::optional<std::pair<std::string, std::string>> contrast;
    // Display names for stratum labels, e.g. {"1", "recid"}.
    std::map<std::string, std::string> stratum_names;
    std::size_t bins = 20;
    // Histogram range; unset uses [min, max] of the estimates.
    std::optional<std::pair<double, double>> range;
    // Regression studies: also tabulate the target's own group gap.
    std::optional<std::string> truth_column;
};

struct HistogramCell {
    std::string group;
    std::string stratum;
    Histogram histogram;
};

struct AuditReport {
    BiasTable bias_table;
    std::optional<BiasTable> true_values;
    std::vector<GroupStats> stats;  // every group, including those outside the contrast
    Performance performance;
    std::vector<HistogramCell> histograms;
    nlohmann::json metadata;
};

// Rows with a missing protected or stratum cell are skipped.
AuditReport audit(std::span<const double> estimates, const DataTable& table, const AuditOptions& options,
                  const Performance& performance, const nlohmann::json& metadata = nlohmann::json::object());

nlohmann::json to_json(const GroupStats& s);
nlohmann::json to_json(const BiasTable& t);
nlohmann::json to_json(const AuditReport& r);
// Scores serialize as numbers, or the string "infinite".
nlohmann::json score_to_json(double score);

// Side-by-side tables in the layout rows = mu/sigma/score, columns =
// (table title, stratum). All tables must contrast the same two groups.
using TitledTable = std::pair<std::string, const BiasTable*>;
std::string bias_tables_text(const std::vector<TitledTable>& tables);
std::string bias_tables_csv(const std::vector<TitledTable>& tables);
std::string histograms_csv(const AuditReport& report);

}  // namespace fairprep
