#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairprep {

enum class ColumnKind { Numeric, Categorical, Binary };
enum class ColumnRole { Feature, Protected, Target, Drop };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(ColumnRole role);
ColumnKind parse_kind(std::string_view text);
ColumnRole parse_role(std::string_view text);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    ColumnRole role = ColumnRole::Feature;
    // Ordered labels for categorical columns; always {"0", "1"} for binary.
    std::vector<std::string> categories;

    bool is_coded() const { return kind != ColumnKind::Numeric; }
    std::optional<std::size_t> category_index(std::string_view label) const;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

ColumnSpec numeric_column(std::string name, ColumnRole role = ColumnRole::Feature);
ColumnSpec binary_column(std::string name, ColumnRole role = ColumnRole::Feature);
ColumnSpec categorical_column(std::string name, std::vector<std::string> categories,
                              ColumnRole role = ColumnRole::Feature);

using Schema = std::vector<ColumnSpec>;

// Throws DataError if names repeat or category lists violate the kind rules.
void validate_schema(const Schema& schema);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double cell) { return std::isnan(cell); }

// Column-major table. Numeric cells hold the value; categorical and binary
// cells hold the category index as a double. NaN marks a missing cell.
class DataTable {
public:
    DataTable() = default;
    DataTable(Schema schema, std::vector<std::vector<double>> columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return schema_.size(); }
    const Schema& schema() const { return schema_; }
    const ColumnSpec& spec(std::size_t col) const { return schema_.at(col); }

    std::optional<std::size_t> find(std::string_view name) const;
    // Throws DataError naming the column when absent.
    std::size_t index_of(std::string_view name) const;

    std::span<const double> column(std::size_t col) const { return columns_.at(col); }
    std::span<const double> column(std::string_view name) const { return column(index_of(name)); }
    double cell(std::size_t row, std::size_t col) const { return columns_.at(col).at(row); }

    // Text form of a cell: category label, shortest round-trip number, or "".
    std::string label(std::size_t row, std::size_t col) const;

    std::vector<std::size_t> columns_with_role(ColumnRole role) const;
    std::size_t missing_count(std::size_t col) const;

    // Value-returning edits; the receiver is never modified.
    DataTable with_column(std::size_t col, ColumnSpec spec, std::vector<double> values) const;
    DataTable with_role(std::string_view name, ColumnRole role) const;
    DataTable without_columns(std::span<const std::size_t> cols) const;
    DataTable select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const DataTable& a, const DataTable& b);

private:
    void check() const;

    Schema schema_;
    std::vector<std::vector<double>> columns_;
    std::size_t rows_ = 0;
};

// Shortest representation that parses back to the same double.
std::string format_number(double value);

}  // namespace fairprep
