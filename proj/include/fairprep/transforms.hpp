#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairprep/table.hpp"

namespace fairprep {

// Dataset-preparation transforms. Each returns a new table and leaves its
// input untouched.

// Keeps rows whose category is in `keep`; the column's category list shrinks
// to the kept labels in their original order.
DataTable filter_rows(const DataTable& table, std::string_view column,
                      std::span<const std::string> keep);

// ceil(q * n)-th smallest of the non-missing values (1-based).
double nearest_rank_percentile(std::span<const double> values, double q);

// Binary column: 1 iff the value strictly exceeds the nearest-rank 75th
// percentile. Missing cells stay missing.
DataTable quartile_binarize(const DataTable& table, std::string_view column);

// Half-open buckets x < e1, e1 <= x < e2, ..., x >= e_last. Default labels
// read "under e1", "e1 to e2", ..., "over e_last".
DataTable bucket_numeric(const DataTable& table, std::string_view column,
                         std::span<const double> edges,
                         std::optional<std::vector<std::string>> labels = std::nullopt);

enum class Comparison { GreaterEqual, Greater };
DataTable binarize_threshold(const DataTable& table, std::string_view column,
                             Comparison comparison, double threshold);

// Removes the k columns with the most missing cells; ties drop the earlier
// column first.
DataTable drop_sparse_columns(const DataTable& table, std::size_t k);

DataTable drop_columns(const DataTable& table, std::span<const std::string> names);
DataTable drop_role_columns(const DataTable& table, ColumnRole role = ColumnRole::Drop);

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

// Seeded shuffle, stratified on the target column when it is categorical or
// binary. The test size is round(test_fraction * n), allocated to classes by
// largest remainder.
SplitIndices split_indices(const DataTable& table, double test_fraction, std::uint64_t seed);

struct TableSplit {
    DataTable train;
    DataTable test;
};
TableSplit train_test_split(const DataTable& table, double test_fraction, std::uint64_t seed);

}  // namespace fairprep
