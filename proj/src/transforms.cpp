#include "fairprep/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairprep/error.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

namespace {

const ColumnSpec& require_numeric(const DataTable& table, std::size_t col, std::string_view op) {
    const auto& spec = table.spec(col);
    if (spec.kind != ColumnKind::Numeric)
        throw DataError(std::string(op) + ": column '" + spec.name + "' is not numeric");
    return spec;
}

}  // namespace

DataTable filter_rows(const DataTable& table, std::string_view column,
                      std::span<const std::string> keep) {
    const auto col = table.index_of(column);
    const auto& spec = table.spec(col);
    if (spec.kind != ColumnKind::Categorical)
        throw DataError("filter_rows: column '" + spec.name + "' is not categorical");

    std::vector<std::string> kept_labels;
    std::vector<double> recode(spec.categories.size(), -1.0);
    for (std::size_t i = 0; i < spec.categories.size(); ++i) {
        if (std::find(keep.begin(), keep.end(), spec.categories[i]) != keep.end()) {
            recode[i] = static_cast<double>(kept_labels.size());
            kept_labels.push_back(spec.categories[i]);
        }
    }
    std::vector<std::size_t> rows;
    const auto cells = table.column(col);
    for (std::size_t r = 0; r < cells.size(); ++r) {
        if (!is_missing(cells[r]) && recode[static_cast<std::size_t>(cells[r])] >= 0) rows.push_back(r);
    }
    if (rows.empty()) throw DataError("filter_rows: no rows of '" + spec.name + "' match the kept set");

    const auto subset = table.select_rows(rows);
    // A single surviving label cannot form a valid category list, so the
    // column then keeps its original categories and codes.
    if (kept_labels.size() < 2) return subset;
    std::vector<double> values;
    values.reserve(rows.size());
    for (double v : subset.column(col)) values.push_back(recode[static_cast<std::size_t>(v)]);
    ColumnSpec out_spec = spec;
    out_spec.categories = std::move(kept_labels);
    return subset.with_column(col, std::move(out_spec), std::move(values));
}

double nearest_rank_percentile(std::span<const double> values, double q) {
    std::vector<double> sorted;
    for (double v : values) {
        if (!is_missing(v)) sorted.push_back(v);
    }
    if (sorted.empty()) throw DataError("percentile of an all-missing column");
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

DataTable quartile_binarize(const DataTable& table, std::string_view column) {
    const auto col = table.index_of(column);
    const auto& spec = require_numeric(table, col, "quartile_binarize");
    const auto cells = table.column(col);
    const double q3 = nearest_rank_percentile(cells, 0.75);
    std::vector<double> flags;
    flags.reserve(cells.size());
    for (double v : cells) flags.push_back(is_missing(v) ? kMissing : (v > q3 ? 1.0 : 0.0));
    return table.with_column(col, binary_column(spec.name, spec.role), std::move(flags));
}

DataTable bucket_numeric(const DataTable& table, std::string_view column,
                         std::span<const double> edges,
                         std::optional<std::vector<std::string>> labels) {
    const auto col = table.index_of(column);
    const auto& spec = require_numeric(table, col, "bucket_numeric");
    if (edges.empty()) throw DataError("bucket_numeric: no edges given");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw DataError("bucket_numeric: edges must be strictly ascending");
    }
    std::vector<std::string> names;
    if (labels) {
        if (labels->size() != edges.size() + 1)
            throw DataError("bucket_numeric: expected " + std::to_string(edges.size() + 1) + " labels");
        names = *labels;
    } else {
        names.push_back("under " + format_number(edges.front()));
        for (std::size_t i = 1; i < edges.size(); ++i)
            names.push_back(format_number(edges[i - 1]) + " to " + format_number(edges[i]));
        names.push_back("over " + format_number(edges.back()));
    }
    std::vector<double> codes;
    for (double v : table.column(col)) {
        if (is_missing(v)) {
            codes.push_back(kMissing);
            continue;
        }
        // Number of edges <= v; a value equal to an edge moves up.
        const auto bucket = std::upper_bound(edges.begin(), edges.end(), v) - edges.begin();
        codes.push_back(static_cast<double>(bucket));
    }
    return table.with_column(col, categorical_column(spec.name, std::move(names), spec.role),
                             std::move(codes));
}

DataTable binarize_threshold(const DataTable& table, std::string_view column,
                             Comparison comparison, double threshold) {
    const auto col = table.index_of(column);
    const auto& spec = require_numeric(table, col, "binarize_threshold");
    std::vector<double> flags;
    for (double v : table.column(col)) {
        if (is_missing(v)) {
            flags.push_back(kMissing);
            continue;
        }
        const bool hit = comparison == Comparison::GreaterEqual ? v >= threshold : v > threshold;
        flags.push_back(hit ? 1.0 : 0.0);
    }
    return table.with_column(col, binary_column(spec.name, spec.role), std::move(flags));
}

DataTable drop_sparse_columns(const DataTable& table, std::size_t k) {
    if (k >= table.cols())
        throw DataError("drop_sparse_columns: k=" + std::to_string(k) + " but the table has only " +
                        std::to_string(table.cols()) + " columns");
    std::vector<std::size_t> order(table.cols());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> missing(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) missing[c] = table.missing_count(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return missing[a] > missing[b]; });
    order.resize(k);
    return table.without_columns(order);
}

DataTable drop_columns(const DataTable& table, std::span<const std::string> names) {
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(table.index_of(n));
    return table.without_columns(cols);
}

DataTable drop_role_columns(const DataTable& table, ColumnRole role) {
    return table.without_columns(table.columns_with_role(role));
}

SplitIndices split_indices(const DataTable& table, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw UsageError("test fraction must lie in (0, 1)");
    const std::size_t n = table.rows();
    if (n < 10) throw DataError("train_test_split needs at least 10 rows, got " + std::to_string(n));

    // Group rows by class; a numeric or absent target is a single class.
    std::vector<std::vector<std::size_t>> classes;
    const auto targets = table.columns_with_role(ColumnRole::Target);
    if (targets.size() == 1 && table.spec(targets.front()).is_coded()) {
        const auto& spec = table.spec(targets.front());
        classes.resize(spec.categories.size() + 1);  // last slot: missing target
        const auto cells = table.column(targets.front());
        for (std::size_t r = 0; r < n; ++r) {
            const auto k = is_missing(cells[r]) ? spec.categories.size() : static_cast<std::size_t>(cells[r]);
            classes[k].push_back(r);
        }
        for (std::size_t k = 0; k < spec.categories.size(); ++k) {
            if (!classes[k].empty() && classes[k].size() < 2)
                throw DataError("target class '" + spec.categories[k] + "' has fewer than 2 rows");
        }
        std::erase_if(classes, [](const auto& c) { return c.empty(); });
    } else {
        classes.emplace_back(n);
        std::iota(classes.front().begin(), classes.front().end(), 0);
    }

    const auto total_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    std::vector<std::size_t> quota(classes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const double exact = test_fraction * static_cast<double>(classes[k].size());
        quota[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total_test && i < remainders.size(); ++i, ++assigned)
        ++quota[remainders[i].second];

    Rng rng = Rng(seed).split("train_test_split");
    SplitIndices out;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        auto rows = classes[k];
        rng.shuffle(std::span(rows));
        out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota[k]));
        out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(quota[k]), rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

TableSplit train_test_split(const DataTable& table, double test_fraction, std::uint64_t seed) {
    const auto idx = split_indices(table, test_fraction, seed);
    return {table.select_rows(idx.train), table.select_rows(idx.test)};
}

}  // namespace fairprep
