#include "fairprep/table.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "fairprep/error.hpp"

namespace fairprep {

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Binary: return "binary";
    }
    return "?";
}

std::string_view to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::Feature: return "feature";
        case ColumnRole::Protected: return "protected";
        case ColumnRole::Target: return "target";
        case ColumnRole::Drop: return "drop";
    }
    return "?";
}

ColumnKind parse_kind(std::string_view text) {
    if (text == "numeric") return ColumnKind::Numeric;
    if (text == "categorical") return ColumnKind::Categorical;
    if (text == "binary") return ColumnKind::Binary;
    throw DataError("unknown column kind '" + std::string(text) + "'");
}

ColumnRole parse_role(std::string_view text) {
    if (text == "feature") return ColumnRole::Feature;
    if (text == "protected") return ColumnRole::Protected;
    if (text == "target") return ColumnRole::Target;
    if (text == "drop") return ColumnRole::Drop;
    throw DataError("unknown column role '" + std::string(text) + "'");
}

std::optional<std::size_t> ColumnSpec::category_index(std::string_view label) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) return i;
    }
    // "1.0" matches the category "1".
    auto as_number = [](std::string_view t) -> std::optional<double> {
        double v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
        return v;
    };
    const auto wanted = as_number(label);
    if (!wanted) return std::nullopt;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (as_number(categories[i]) == wanted) return i;
    }
    return std::nullopt;
}

ColumnSpec numeric_column(std::string name, ColumnRole role) {
    return {std::move(name), ColumnKind::Numeric, role, {}};
}

ColumnSpec binary_column(std::string name, ColumnRole role) {
    return {std::move(name), ColumnKind::Binary, role, {"0", "1"}};
}

ColumnSpec categorical_column(std::string name, std::vector<std::string> categories,
                              ColumnRole role) {
    return {std::move(name), ColumnKind::Categorical, role, std::move(categories)};
}

void validate_schema(const Schema& schema) {
    std::set<std::string_view> seen;
    for (const auto& c : schema) {
        if (c.name.empty()) throw DataError("schema contains an unnamed column");
        if (!seen.insert(c.name).second) throw DataError("duplicate column name '" + c.name + "'");
        switch (c.kind) {
            case ColumnKind::Numeric:
                if (!c.categories.empty())
                    throw DataError("numeric column '" + c.name + "' declares categories");
                break;
            case ColumnKind::Binary:
                if (c.categories != std::vector<std::string>{"0", "1"})
                    throw DataError("binary column '" + c.name + "' must have categories {0, 1}");
                break;
            case ColumnKind::Categorical: {
                // Dropped free-text columns may leave the category list empty.
                if (c.categories.size() < 2 && !(c.role == ColumnRole::Drop && c.categories.empty()))
                    throw DataError("categorical column '" + c.name + "' needs at least 2 categories");
                std::set<std::string_view> labels(c.categories.begin(), c.categories.end());
                if (labels.size() != c.categories.size())
                    throw DataError("categorical column '" + c.name + "' repeats a category");
                break;
            }
        }
    }
}

DataTable::DataTable(Schema schema, std::vector<std::vector<double>> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
    rows_ = columns_.empty() ? 0 : columns_.front().size();
    check();
}

void DataTable::check() const {
    validate_schema(schema_);
    if (columns_.size() != schema_.size())
        throw DataError("table has " + std::to_string(columns_.size()) + " columns but schema has " +
                        std::to_string(schema_.size()));
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto& col = columns_[c];
        if (col.size() != rows_)
            throw DataError("column '" + schema_[c].name + "' has a ragged length");
        const auto& spec = schema_[c];
        for (double v : col) {
            if (is_missing(v)) continue;
            if (!std::isfinite(v))
                throw DataError("column '" + spec.name + "' holds a non-finite value");
            if (spec.is_coded()) {
                if (v < 0 || v >= static_cast<double>(spec.categories.size()) || v != std::floor(v))
                    throw DataError("column '" + spec.name + "' holds an undeclared category code");
            }
        }
    }
}

std::optional<std::size_t> DataTable::find(std::string_view name) const {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t DataTable::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw DataError("unknown column '" + std::string(name) + "'");
}

std::string DataTable::label(std::size_t row, std::size_t col) const {
    const double v = cell(row, col);
    if (is_missing(v)) return {};
    const auto& spec = schema_[col];
    if (spec.is_coded()) return spec.categories[static_cast<std::size_t>(v)];
    return format_number(v);
}

std::vector<std::size_t> DataTable::columns_with_role(ColumnRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].role == role) out.push_back(i);
    }
    return out;
}

std::size_t DataTable::missing_count(std::size_t col) const {
    const auto c = column(col);
    return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), is_missing));
}

DataTable DataTable::with_column(std::size_t col, ColumnSpec spec, std::vector<double> values) const {
    Schema schema = schema_;
    auto columns = columns_;
    schema.at(col) = std::move(spec);
    columns.at(col) = std::move(values);
    return DataTable(std::move(schema), std::move(columns));
}

DataTable DataTable::with_role(std::string_view name, ColumnRole role) const {
    const auto col = index_of(name);
    ColumnSpec spec = schema_[col];
    spec.role = role;
    return with_column(col, std::move(spec), columns_[col]);
}

DataTable DataTable::without_columns(std::span<const std::size_t> cols) const {
    Schema schema;
    std::vector<std::vector<double>> columns;
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (std::find(cols.begin(), cols.end(), i) != cols.end()) continue;
        schema.push_back(schema_[i]);
        columns.push_back(columns_[i]);
    }
    DataTable out(std::move(schema), std::move(columns));
    out.rows_ = rows_;
    return out;
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::vector<double>> columns(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        columns[c].reserve(rows.size());
        for (auto r : rows) columns[c].push_back(columns_[c].at(r));
    }
    DataTable out(schema_, std::move(columns));
    out.rows_ = rows.size();
    return out;
}

bool operator==(const DataTable& a, const DataTable& b) {
    if (a.schema_ != b.schema_ || a.rows_ != b.rows_) return false;
    for (std::size_t c = 0; c < a.columns_.size(); ++c) {
        for (std::size_t r = 0; r < a.rows_; ++r) {
            const double x = a.columns_[c][r];
            const double y = b.columns_[c][r];
            if (is_missing(x) != is_missing(y)) return false;
            if (!is_missing(x) && x != y) return false;
        }
    }
    return true;
}

std::string format_number(double value) {
    if (is_missing(value)) return {};
    if (value == 0.0) return "0";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

}  // namespace fairprep
