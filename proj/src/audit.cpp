#include "fairprep/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "fairprep/error.hpp"
#include "fairprep/io.hpp"

namespace fairprep {

std::vector<GroupStats> group_stats(std::span<const double> estimates, std::span<const std::string> groups,
                                    std::span<const std::string> strata) {
    if (estimates.size() != groups.size() || estimates.size() != strata.size())
        throw DataError("group_stats: estimates, groups and strata differ in length");
    const std::set<std::string> group_set(groups.begin(), groups.end());
    const std::set<std::string> stratum_set(strata.begin(), strata.end());
    std::vector<GroupStats> out;
    for (const auto& s : stratum_set) {
        for (const auto& g : group_set) {
            GroupStats st{g, s, 0, 0.0, 0.0};
            double sum = 0;
            for (std::size_t i = 0; i < estimates.size(); ++i) {
                if (groups[i] == g && strata[i] == s) {
                    sum += estimates[i];
                    ++st.n;
                }
            }
            if (st.n == 0) throw DataError("group_stats: no rows for group '" + g + "' in stratum '" + s + "'");
            st.mu = sum / static_cast<double>(st.n);
            double ss = 0;
            for (std::size_t i = 0; i < estimates.size(); ++i) {
                if (groups[i] == g && strata[i] == s) ss += (estimates[i] - st.mu) * (estimates[i] - st.mu);
            }
            st.sigma = std::sqrt(ss / static_cast<double>(st.n));
            out.push_back(std::move(st));
        }
    }
    return out;
}

double bias_score(const GroupStats& a, const GroupStats& b) {
    const double diff = std::abs(a.mu - b.mu);
    const double avg = 0.5 * (a.sigma + b.sigma);
    if (avg == 0.0) return diff == 0.0 ? 0.0 : kInfiniteBias;
    return diff / avg;
}

const BiasRow& BiasTable::row(std::string_view stratum) const {
    for (const auto& r : rows) {
        if (r.stratum == stratum) return r;
    }
    throw DataError("bias table has no stratum '" + std::string(stratum) + "'");
}

BiasTable make_bias_table(const std::vector<GroupStats>& stats, const std::string& group_a,
                          const std::string& group_b, const std::vector<std::string>& strata) {
    auto find = [&](const std::string& g, const std::string& s) -> const GroupStats& {
        for (const auto& st : stats) {
            if (st.group == g && st.stratum == s) return st;
        }
        throw DataError("no statistics for group '" + g + "' in stratum '" + s + "'");
    };
    BiasTable t{group_a, group_b, {}};
    for (const auto& s : strata) {
        BiasRow r;
        r.stratum = s;
        r.a = find(group_a, s);
        r.b = find(group_b, s);
        r.mu_diff = std::abs(r.a.mu - r.b.mu);
        r.sigma_avg = 0.5 * (r.a.sigma + r.b.sigma);
        r.score = bias_score(r.a, r.b);
        t.rows.push_back(std::move(r));
    }
    return t;
}

double Histogram::bin_lo(std::size_t i) const {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
}

double Histogram::bin_hi(std::size_t i) const {
    return i + 1 == counts.size() ? hi : bin_lo(i + 1);
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (values.empty()) throw DataError("histogram: no values");
    if (bins == 0) throw UsageError("histogram: need at least one bin");
    if (!(hi > lo)) throw UsageError("histogram: range upper bound must exceed the lower bound");
    Histogram h{lo, hi, std::vector<std::size_t>(bins, 0), 0, 0};
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t k;
        if (v < lo) {
            ++h.clamped_low;
            k = 0;
        } else if (v > hi) {
            ++h.clamped_high;
            k = bins - 1;
        } else {
            k = std::min(bins - 1, static_cast<std::size_t>((v - lo) / width));
            // Division can land one bin off at an edge; settle against the reported edges.
            while (k + 1 < bins && v >= h.bin_lo(k + 1)) ++k;
            while (k > 0 && v < h.bin_lo(k)) --k;
        }
        ++h.counts[k];
    }
    return h;
}

AuditReport audit(std::span<const double> estimates, const DataTable& table, const AuditOptions& options,
                  const Performance& performance, const nlohmann::json& metadata) {
    if (estimates.size() != table.rows())
        throw DataError("audit: " + std::to_string(estimates.size()) + " estimates for " +
                        std::to_string(table.rows()) + " rows");
    const auto pcol = table.index_of(options.protected_column);
    std::optional<std::size_t> scol;
    if (options.stratum_column) scol = table.index_of(*options.stratum_column);
    std::optional<std::size_t> tcol;
    if (options.truth_column) tcol = table.index_of(*options.truth_column);

    std::vector<double> est, truth;
    std::vector<std::string> groups, strata;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (is_missing(table.cell(r, pcol))) continue;
        std::string stratum = "all";
        if (scol) {
            if (is_missing(table.cell(r, *scol))) continue;
            stratum = table.label(r, *scol);
            if (auto it = options.stratum_names.find(stratum); it != options.stratum_names.end())
                stratum = it->second;
        }
        if (tcol && is_missing(table.cell(r, *tcol))) continue;
        est.push_back(estimates[r]);
        if (tcol) truth.push_back(table.cell(r, *tcol));
        groups.push_back(table.label(r, pcol));
        strata.push_back(std::move(stratum));
    }
    const std::set<std::string> present(groups.begin(), groups.end());
    if (present.size() < 2) throw DataError("audit: fewer than two groups in '" + options.protected_column + "'");

    std::pair<std::string, std::string> contrast;
    if (options.contrast) {
        contrast = *options.contrast;
    } else {
        const auto& cats = table.spec(pcol).categories;
        if (cats.size() != 2)
            throw UsageError("audit: '" + options.protected_column +
                             "' has more than two groups; name the two to contrast");
        contrast = {cats[0], cats[1]};
    }
    for (const auto& g : {contrast.first, contrast.second}) {
        if (!present.contains(g)) throw DataError("audit: group '" + g + "' has no rows");
    }

    // Strata in the order their labels are declared (or "all").
    std::vector<std::string> stratum_order;
    if (scol) {
        for (const auto& c : table.spec(*scol).categories) {
            auto it = options.stratum_names.find(c);
            const auto name = it == options.stratum_names.end() ? c : it->second;
            if (std::find(strata.begin(), strata.end(), name) != strata.end()) stratum_order.push_back(name);
        }
    } else {
        stratum_order.push_back("all");
    }

    AuditReport report;
    report.stats = group_stats(est, groups, strata);
    report.bias_table = make_bias_table(report.stats, contrast.first, contrast.second, stratum_order);
    if (tcol) {
        const auto truth_stats = group_stats(truth, groups, strata);
        report.true_values = make_bias_table(truth_stats, contrast.first, contrast.second, stratum_order);
    }
    report.performance = performance;
    report.metadata = metadata;

    double lo, hi;
    if (options.range) {
        std::tie(lo, hi) = *options.range;
    } else {
        const auto [mn, mx] = std::minmax_element(est.begin(), est.end());
        lo = *mn;
        hi = *mx > *mn ? *mx : *mn + 1.0;
    }
    for (const auto& s : stratum_order) {
        for (const auto& g : present) {
            std::vector<double> cell;
            for (std::size_t i = 0; i < est.size(); ++i) {
                if (groups[i] == g && strata[i] == s) cell.push_back(est[i]);
            }
            if (cell.empty()) continue;
            report.histograms.push_back({g, s, histogram(cell, options.bins, lo, hi)});
        }
    }
    return report;
}

nlohmann::json score_to_json(double score) {
    if (std::isinf(score)) return "infinite";
    return score;
}

nlohmann::json to_json(const GroupStats& s) {
    return {{"group", s.group}, {"stratum", s.stratum}, {"n", s.n}, {"mu", s.mu}, {"sigma", s.sigma}};
}

nlohmann::json to_json(const BiasTable& t) {
    auto rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"stratum", r.stratum},
                        {"a", to_json(r.a)},
                        {"b", to_json(r.b)},
                        {"mu_diff", r.mu_diff},
                        {"sigma_avg", r.sigma_avg},
                        {"bias_score", score_to_json(r.score)}});
    }
    return {{"group_a", t.group_a}, {"group_b", t.group_b}, {"strata", rows}};
}

nlohmann::json to_json(const AuditReport& r) {
    auto stats = nlohmann::json::array();
    for (const auto& s : r.stats) stats.push_back(to_json(s));
    auto hists = nlohmann::json::array();
    for (const auto& h : r.histograms) {
        hists.push_back({{"group", h.group},
                         {"stratum", h.stratum},
                         {"lo", h.histogram.lo},
                         {"hi", h.histogram.hi},
                         {"counts", h.histogram.counts},
                         {"clamped_low", h.histogram.clamped_low},
                         {"clamped_high", h.histogram.clamped_high}});
    }
    nlohmann::json doc = {{"bias_table", to_json(r.bias_table)},
                          {"group_stats", stats},
                          {"performance",
                           {{"metric", r.performance.metric},
                            {"value", r.performance.value},
                            {"split", r.performance.split}}},
                          {"histograms", hists},
                          {"metadata", r.metadata}};
    if (r.true_values) doc["true_values"] = to_json(*r.true_values);
    return doc;
}

namespace {

std::string fixed(double v, int digits = 2) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct Layout {
    std::vector<std::string> header;  // column titles "title:stratum"
    std::vector<std::pair<std::string, std::vector<double>>> rows;
};

Layout layout(const std::vector<TitledTable>& tables) {
    if (tables.empty()) throw UsageError("no bias tables to render");
    const auto& first = *tables.front().second;
    for (const auto& [title, t] : tables) {
        if (t->group_a != first.group_a || t->group_b != first.group_b)
            throw UsageError("bias tables contrast different groups");
    }
    Layout l;
    const std::string a = first.group_a, b = first.group_b;
    l.rows = {{"mu " + a, {}},     {"mu " + b, {}},     {"mu diff", {}},
              {"sigma " + a, {}},  {"sigma " + b, {}},  {"sigma average", {}},
              {"mu diff / sigma average", {}}};
    for (const auto& [title, t] : tables) {
        for (const auto& r : t->rows) {
            l.header.push_back(title + ":" + r.stratum);
            const double values[] = {r.a.mu, r.b.mu, r.mu_diff, r.a.sigma, r.b.sigma, r.sigma_avg, r.score};
            for (std::size_t i = 0; i < l.rows.size(); ++i) l.rows[i].second.push_back(values[i]);
        }
    }
    return l;
}

}  // namespace

std::string bias_tables_text(const std::vector<TitledTable>& tables) {
    const auto l = layout(tables);
    std::size_t label_w = 0;
    for (const auto& [name, _] : l.rows) label_w = std::max(label_w, name.size());
    std::size_t col_w = 6;
    for (const auto& h : l.header) col_w = std::max(col_w, h.size());
    auto pad = [](std::string s, std::size_t w, bool right) {
        const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
        return right ? fill + s : s + fill;
    };
    std::string out = pad("", label_w, false);
    for (const auto& h : l.header) out += " | " + pad(h, col_w, true);
    out += "\n" + std::string(out.size(), '-') + "\n";
    for (const auto& [name, values] : l.rows) {
        out += pad(name, label_w, false);
        for (double v : values) out += " | " + pad(fixed(v), col_w, true);
        out += "\n";
    }
    return out;
}

std::string bias_tables_csv(const std::vector<TitledTable>& tables) {
    const auto l = layout(tables);
    std::string out = "row";
    for (const auto& h : l.header) out += "," + quote_csv_field(h);
    out += "\n";
    for (const auto& [name, values] : l.rows) {
        out += quote_csv_field(name);
        for (double v : values) out += "," + (std::isinf(v) ? std::string("inf") : format_number(v));
        out += "\n";
    }
    return out;
}

std::string histograms_csv(const AuditReport& report) {
    std::string out = "bin_lo,bin_hi,group,stratum,count\n";
    for (const auto& cell : report.histograms) {
        const auto& h = cell.histogram;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            out += format_number(h.bin_lo(i)) + "," + format_number(h.bin_hi(i)) + "," +
                   quote_csv_field(cell.group) + "," + quote_csv_field(cell.stratum) + "," +
                   std::to_string(h.counts[i]) + "\n";
        }
    }
    return out;
}

}  // namespace fairprep
