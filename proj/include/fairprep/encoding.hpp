#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fairprep/table.hpp"

namespace fairprep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// How a run of design columns reconstructs one source column.
struct FeatureBlock {
    enum class Type { Numeric, Binary, OneHot };
    Type type = Type::Numeric;
    std::size_t source = 0;  // column index in the source schema
    std::size_t first = 0;   // first design column
    std::size_t width = 1;
    // OneHot only: the last slot stands for a missing cell.
    bool missing_slot = false;
};

// Fitted feature encoding: the reversible column map plus the scaler.
struct Encoding {
    Schema schema;                     // full source schema, roles included
    std::vector<FeatureBlock> blocks;  // role=feature columns in schema order
    std::vector<double> mean;          // per design column
    std::vector<double> scale;         // per design column; 1 for one-hot and binary
    std::vector<double> fill;          // per source column: numeric mean, binary rate, or mode code

    std::size_t width() const { return mean.size(); }
    // Text label for a design column, e.g. "age" or "race=Caucasian".
    std::string design_name(std::size_t j) const;
};

struct DesignMatrix {
    Matrix values;  // n x d, feature block only
    Encoding encoding;
    // Protected and target columns ride along untouched, keyed by source index.
    std::vector<std::pair<std::size_t, std::vector<double>>> carried;

    std::span<const double> carried_column(std::size_t source) const;
};

// Numeric columns are standardized with the population standard deviation
// when `fit_scaler` is set (constant columns keep scale 1); binary columns
// stay 0/1; categorical columns become one-hot groups. Missing numeric cells
// take the fitting mean, missing binary cells the fitting rate, and missing
// categorical cells get an explicit extra slot when the fitting data had any.
Encoding fit_encoding(const DataTable& table, bool fit_scaler = true);

DesignMatrix encode(const DataTable& table, const Encoding& encoding);
DesignMatrix encode(const DataTable& table, bool fit_scaler);

// Inverse map. One-hot groups take the argmax (lowest index on ties); binary
// columns become 1 above 0.5. Carried columns are restored in place.
DataTable decode(const DesignMatrix& matrix);
DataTable decode(const Matrix& values, const Encoding& encoding,
                 const std::vector<std::pair<std::size_t, std::vector<double>>>& carried);

nlohmann::json encoding_to_json(const Encoding& encoding);
Encoding encoding_from_json(const nlohmann::json& doc);

}  // namespace fairprep
