#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairprep/encoding.hpp"

namespace fairprep {

enum class LinearKind { Linear, Logistic };

struct LinearModel {
    Vector weights;
    double intercept = 0.0;
    LinearKind kind = LinearKind::Linear;
    double ridge_lambda = 0.0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    std::size_t batch_size = 0;  // 0 or >= n: full batch
    double l2 = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Mean cross-entropy + l2 * ||w||^2 (intercept unpenalized) by gradient
// descent from zero. Mini-batches, when requested, are reshuffled every
// epoch from cfg.seed. `loss_history`, if given, receives the full-data
// objective after every epoch.
LinearModel fit_logistic(const Matrix& x, std::span<const double> y, const TrainConfig& cfg,
                         std::vector<double>* loss_history = nullptr);

// Penalized least squares ||y - Xw - b||^2 + lambda ||w||^2 solved in closed
// form on centred data, so the intercept is never penalized.
LinearModel fit_linear(const Matrix& x, std::span<const double> y, double ridge_lambda);

Vector predict(const LinearModel& model, const Matrix& x);

// Objective minimized by fit_logistic, with probabilities clamped to
// [1e-12, 1 - 1e-12].
double logistic_objective(const LinearModel& model, const Matrix& x, std::span<const double> y, double l2);

// A probability strictly above the threshold predicts class 1.
double accuracy(std::span<const double> probs, std::span<const double> labels, double threshold = 0.5);
double r_squared(std::span<const double> preds, std::span<const double> y);
// Mann-Whitney AUC; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

nlohmann::json linear_to_json(const LinearModel& model, const nlohmann::json& config_echo = {});
LinearModel linear_from_json(const nlohmann::json& doc);

}  // namespace fairprep
