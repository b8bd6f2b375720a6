#include "gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "oracles.hpp"

namespace gradcheck {

using fairprep::Activation;
using fairprep::Matrix;

namespace {

const char* loss_name(Loss l) {
    switch (l) {
        case Loss::SquaredError: return "squared-error";
        case Loss::BinaryCrossEntropy: return "binary-cross-entropy";
        case Loss::SoftmaxCrossEntropy: return "softmax-cross-entropy";
        case Loss::LinearFunctional: return "linear-functional";
    }
    return "?";
}

std::size_t pick(fairprep::Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Matrix random_matrix(fairprep::Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
    }
    return m;
}

}  // namespace

std::string Case::describe() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < net.dims.size(); ++i) os << (i ? "," : "") << net.dims[i];
    os << "] " << fairprep::to_string(net.hidden) << "/" << fairprep::to_string(net.output) << " "
       << loss_name(loss) << " n=" << x.rows();
    return os.str();
}

Case random_case(fairprep::Rng& rng) {
    static const Activation hidden[] = {Activation::Tanh, Activation::Relu, Activation::Sigmoid,
                                        Activation::Identity};
    static const Loss losses[] = {Loss::SquaredError, Loss::BinaryCrossEntropy, Loss::SoftmaxCrossEntropy,
                                  Loss::LinearFunctional};
    Case c;
    c.loss = losses[rng.below(4)];
    std::vector<std::size_t> dims{pick(rng, 1, 6)};
    const auto depth = pick(rng, 0, 3);
    for (std::size_t i = 0; i < depth; ++i) dims.push_back(pick(rng, 1, 8));
    const std::size_t k = c.loss == Loss::SoftmaxCrossEntropy ? pick(rng, 2, 4) : pick(rng, 1, 4);
    dims.push_back(k);

    Activation out = Activation::Identity;
    switch (c.loss) {
        case Loss::SquaredError: out = rng.bernoulli(0.5) ? Activation::Identity : Activation::Softmax; break;
        case Loss::BinaryCrossEntropy: out = Activation::Sigmoid; break;
        case Loss::SoftmaxCrossEntropy: out = Activation::Softmax; break;
        case Loss::LinearFunctional: out = hidden[rng.below(4)]; break;
    }
    c.net = fairprep::mlp_init(dims, hidden[rng.below(4)], out, rng);
    // Non-zero biases so every code path sees them.
    for (auto& b : c.net.biases) {
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.3 * rng.normal();
    }
    const auto n = pick(rng, 2, 8);
    c.x = random_matrix(rng, n, dims.front(), 1.0);
    switch (c.loss) {
        case Loss::SquaredError:
        case Loss::LinearFunctional:
            c.y = random_matrix(rng, n, k, 1.0);
            break;
        case Loss::BinaryCrossEntropy:
            c.y = Matrix(n, k);
            for (Eigen::Index r = 0; r < c.y.rows(); ++r) {
                for (Eigen::Index j = 0; j < c.y.cols(); ++j) c.y(r, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
            }
            break;
        case Loss::SoftmaxCrossEntropy:
            c.y = Matrix::Zero(n, k);
            for (Eigen::Index r = 0; r < c.y.rows(); ++r) c.y(r, rng.below(k)) = 1.0;
            break;
    }
    return c;
}

double loss_value(const Case& c, const fairprep::Mlp& net, const Matrix& x) {
    const Matrix out = fairprep::mlp_forward(net, x).output;
    const double n = static_cast<double>(out.rows());
    const double cells = n * static_cast<double>(out.cols());
    double s = 0;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            const double p = out(r, j), t = c.y(r, j);
            switch (c.loss) {
                case Loss::SquaredError: s += (p - t) * (p - t) / cells; break;
                case Loss::BinaryCrossEntropy: s -= (t * std::log(p) + (1 - t) * std::log(1 - p)) / cells; break;
                case Loss::SoftmaxCrossEntropy: s -= t * std::log(p) / n; break;
                case Loss::LinearFunctional: s += t * p; break;
            }
        }
    }
    return s;
}

Outcome check(const Case& c, double h, double floor) {
    const auto cache = fairprep::mlp_forward(c.net, c.x);
    const Matrix& p = cache.output;
    const double n = static_cast<double>(p.rows());
    const double cells = n * static_cast<double>(p.cols());
    fairprep::Gradients g;
    switch (c.loss) {
        case Loss::SquaredError:
            g = fairprep::mlp_backward(c.net, cache, 2.0 * (p - c.y) / cells);
            break;
        case Loss::BinaryCrossEntropy: {
            const Matrix dp = ((p - c.y).array() / (p.array() * (1 - p.array()))).matrix() / cells;
            g = fairprep::mlp_backward(c.net, cache, dp);
            break;
        }
        case Loss::SoftmaxCrossEntropy:
            g = fairprep::mlp_backward_from_logits(c.net, cache, (p - c.y) / n);
            break;
        case Loss::LinearFunctional:
            g = fairprep::mlp_backward(c.net, cache, c.y);
            break;
    }

    Outcome out;
    const auto params = fairprep::flatten(c.net);
    auto f_params = [&](const oracle::Vec& theta) {
        fairprep::Mlp copy = c.net;
        fairprep::unflatten(copy, theta);
        return loss_value(c, copy, c.x);
    };
    out.param_error = oracle::max_relative_error(fairprep::flatten(g), oracle::central_diff(f_params, params, h), floor);

    oracle::Vec xin, gin;
    for (Eigen::Index r = 0; r < c.x.rows(); ++r) {
        for (Eigen::Index j = 0; j < c.x.cols(); ++j) {
            xin.push_back(c.x(r, j));
            gin.push_back(g.input(r, j));
        }
    }
    auto f_input = [&](const oracle::Vec& flat) {
        Matrix x(c.x.rows(), c.x.cols());
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = flat[i++];
        }
        return loss_value(c, c.net, x);
    };
    out.input_error = oracle::max_relative_error(gin, oracle::central_diff(f_input, xin, h), floor);
    return out;
}

}  // namespace gradcheck
