#include "fairprep/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairprep/error.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

namespace {

Vector as_vector(std::span<const double> y) {
    return Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
    if (epochs < 1) throw UsageError("epochs must be at least 1");
    if (!(l2 >= 0)) throw UsageError("l2 must be non-negative");
}

double logistic_objective(const LinearModel& model, const Matrix& x, std::span<const double> y, double l2) {
    const Vector z = (x * model.weights).array() + model.intercept;
    double loss = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double p = std::clamp(sigmoid(z(i)), 1e-12, 1.0 - 1e-12);
        const double t = y[static_cast<std::size_t>(i)];
        loss -= t * std::log(p) + (1 - t) * std::log(1 - p);
    }
    return loss / static_cast<double>(z.size()) + l2 * model.weights.squaredNorm();
}

LinearModel fit_logistic(const Matrix& x, std::span<const double> y, const TrainConfig& cfg,
                         std::vector<double>* loss_history) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(x.rows());
    if (y.size() != n) throw DataError("fit_logistic: label count does not match rows");
    if (n < 2) throw DataError("fit_logistic: need at least 2 rows");
    std::size_t positives = 0;
    for (double t : y) {
        if (t != 0.0 && t != 1.0) throw DataError("fit_logistic: labels must be 0 or 1");
        positives += t == 1.0;
    }
    if (positives == 0 || positives == n) throw DataError("fit_logistic: labels contain a single class");

    LinearModel model;
    model.kind = LinearKind::Logistic;
    model.weights = Vector::Zero(x.cols());
    const Vector target = as_vector(y);

    const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size >= n) ? n : cfg.batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(cfg.seed).split("fit_logistic");

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < n) rng.shuffle(std::span(order));
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t m = std::min(batch, n - start);
            Vector err(static_cast<Eigen::Index>(m));
            Matrix xb;
            if (m == n) {
                const Vector z = (x * model.weights).array() + model.intercept;
                err = z.unaryExpr(&sigmoid) - target;
                xb = x;
            } else {
                xb.resize(static_cast<Eigen::Index>(m), x.cols());
                Vector tb(static_cast<Eigen::Index>(m));
                for (std::size_t k = 0; k < m; ++k) {
                    xb.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(order[start + k]));
                    tb(static_cast<Eigen::Index>(k)) = target(static_cast<Eigen::Index>(order[start + k]));
                }
                const Vector z = (xb * model.weights).array() + model.intercept;
                err = z.unaryExpr(&sigmoid) - tb;
            }
            const double inv = 1.0 / static_cast<double>(m);
            const Vector gw = inv * (xb.transpose() * err) + 2.0 * cfg.l2 * model.weights;
            const double gb = inv * err.sum();
            model.weights -= cfg.learning_rate * gw;
            model.intercept -= cfg.learning_rate * gb;
        }
        if (!model.weights.allFinite() || !std::isfinite(model.intercept))
            throw NumericalError("fit_logistic diverged at epoch " + std::to_string(epoch), epoch);
        if (loss_history) loss_history->push_back(logistic_objective(model, x, y, cfg.l2));
    }
    return model;
}

LinearModel fit_linear(const Matrix& x, std::span<const double> y, double ridge_lambda) {
    if (!(ridge_lambda >= 0)) throw UsageError("ridge lambda must be non-negative");
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != y.size()) throw DataError("fit_linear: target count does not match rows");
    if (n < 1) throw DataError("fit_linear: no rows");
    const Vector target = as_vector(y);
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = target.mean();
    const Matrix xc = x.rowwise() - x_mean;
    const Vector yc = target.array() - y_mean;

    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += ridge_lambda;
    LinearModel model;
    model.kind = LinearKind::Linear;
    model.ridge_lambda = ridge_lambda;
    if (x.cols() > 0) {
        Eigen::LDLT<Matrix> ldlt(gram);
        const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
        const double rcond = ldlt.rcond();
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(rcond > 1e-12) ||
            ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12 * scale) {
            throw NumericalError(ridge_lambda == 0
                                     ? "fit_linear: singular normal equations; use a ridge lambda > 0"
                                     : "fit_linear: normal equations are numerically singular");
        }
        model.weights = ldlt.solve(xc.transpose() * yc);
    } else {
        model.weights = Vector::Zero(0);
    }
    model.intercept = y_mean - x_mean.dot(model.weights);
    if (!model.weights.allFinite() || !std::isfinite(model.intercept))
        throw NumericalError("fit_linear produced non-finite coefficients");
    return model;
}

Vector predict(const LinearModel& model, const Matrix& x) {
    if (x.cols() != model.weights.size())
        throw DataError("predict: model expects " + std::to_string(model.weights.size()) + " columns, got " +
                        std::to_string(x.cols()));
    Vector z = (x * model.weights).array() + model.intercept;
    if (model.kind == LinearKind::Logistic) z = z.unaryExpr(&sigmoid);
    return z;
}

double accuracy(std::span<const double> probs, std::span<const double> labels, double threshold) {
    if (probs.size() != labels.size()) throw DataError("accuracy: length mismatch");
    if (probs.empty()) throw DataError("accuracy: no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) hits += (probs[i] > threshold ? 1.0 : 0.0) == labels[i];
    return static_cast<double>(hits) / static_cast<double>(probs.size());
}

double r_squared(std::span<const double> preds, std::span<const double> y) {
    if (preds.size() != y.size()) throw DataError("r_squared: length mismatch");
    if (y.empty()) throw DataError("r_squared: no values");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - preds[i]) * (y[i] - preds[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0) throw DataError("r_squared: target is constant");
    return 1.0 - ss_res / ss_tot;
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw DataError("roc_auc: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // Average ranks over ties, then the rank-sum statistic.
    double rank_sum_pos = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1.0) {
                rank_sum_pos += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw DataError("roc_auc: labels contain a single class");
    const double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

nlohmann::json linear_to_json(const LinearModel& model, const nlohmann::json& config_echo) {
    std::vector<double> w(model.weights.data(), model.weights.data() + model.weights.size());
    nlohmann::json doc = {{"kind", model.kind == LinearKind::Logistic ? "logistic" : "linear"},
                          {"dims", {model.weights.size()}},
                          {"parameters", w},
                          {"intercept", model.intercept},
                          {"ridge_lambda", model.ridge_lambda}};
    if (!config_echo.is_null()) doc["config"] = config_echo;
    return doc;
}

LinearModel linear_from_json(const nlohmann::json& doc) {
    try {
        LinearModel m;
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "logistic") m.kind = LinearKind::Logistic;
        else if (kind == "linear") m.kind = LinearKind::Linear;
        else throw DataError("unknown linear model kind '" + kind + "'");
        const auto w = doc.at("parameters").get<std::vector<double>>();
        m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.intercept = doc.at("intercept").get<double>();
        m.ridge_lambda = doc.value("ridge_lambda", 0.0);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed linear model: ") + e.what());
    }
}

}  // namespace fairprep
