#include "fairprep/mlp.hpp"

#include <cmath>

#include "fairprep/error.hpp"

namespace fairprep {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Activation parse_activation(std::string_view text) {
    for (auto a : {Activation::Identity, Activation::Relu, Activation::Tanh, Activation::Sigmoid,
                   Activation::Softmax}) {
        if (to_string(a) == text) return a;
    }
    throw DataError("unknown activation '" + std::string(text) + "'");
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
    return n;
}

bool Mlp::finite() const {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    }
    return true;
}

Mlp mlp_init(const std::vector<std::size_t>& dims, Activation hidden, Activation output, Rng& rng) {
    if (dims.size() < 2) throw UsageError("an MLP needs at least an input and an output width");
    for (auto d : dims) {
        if (d == 0) throw UsageError("MLP layer widths must be at least 1");
    }
    if (hidden == Activation::Softmax) throw UsageError("softmax is only valid as the output activation");
    Mlp net;
    net.dims = dims;
    net.hidden = hidden;
    net.output = output;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(dims[i]);
        const auto out = static_cast<Eigen::Index>(dims[i + 1]);
        const double limit = 1.0 / std::sqrt(static_cast<double>(dims[i]));
        Matrix w(in, out);
        for (Eigen::Index r = 0; r < in; ++r) {
            for (Eigen::Index c = 0; c < out; ++c) w(r, c) = rng.uniform(-limit, limit);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(out));
    }
    return net;
}

Matrix apply_activation(Activation a, const Matrix& z) {
    switch (a) {
        case Activation::Identity:
            return z;
        case Activation::Relu:
            return z.cwiseMax(0.0);
        case Activation::Tanh:
            return z.array().tanh().matrix();
        case Activation::Sigmoid:
            return z.unaryExpr([](double v) {
                // Split by sign so exp never overflows.
                if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
                const double e = std::exp(v);
                return e / (1.0 + e);
            });
        case Activation::Softmax: {
            Matrix out(z.rows(), z.cols());
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
                const double m = z.row(r).maxCoeff();
                auto e = (z.row(r).array() - m).exp();
                out.row(r) = (e / e.sum()).matrix();
            }
            return out;
        }
    }
    return z;
}

namespace {

// d activation / d z applied to an upstream gradient; `y` is the activation output.
Matrix activation_backward(Activation a, const Matrix& z, const Matrix& y, const Matrix& grad) {
    switch (a) {
        case Activation::Identity:
            return grad;
        case Activation::Relu:
            return grad.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
        case Activation::Tanh:
            return grad.cwiseProduct((1.0 - y.array().square()).matrix());
        case Activation::Sigmoid:
            return grad.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
        case Activation::Softmax: {
            Matrix out(grad.rows(), grad.cols());
            for (Eigen::Index r = 0; r < grad.rows(); ++r) {
                const double dot = grad.row(r).dot(y.row(r));
                out.row(r) = (y.row(r).array() * (grad.row(r).array() - dot)).matrix();
            }
            return out;
        }
    }
    return grad;
}

}  // namespace

ForwardCache mlp_forward(const Mlp& net, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != net.input_dim())
        throw DataError("MLP expects " + std::to_string(net.input_dim()) + " input columns, got " +
                        std::to_string(x.cols()));
    if (!x.allFinite()) throw DataError("MLP input contains non-finite values");
    ForwardCache cache;
    cache.inputs.reserve(net.layers());
    cache.pre.reserve(net.layers());
    Matrix a = x;
    for (std::size_t i = 0; i < net.layers(); ++i) {
        Matrix z = a * net.weights[i];
        z.rowwise() += net.biases[i].transpose();
        cache.inputs.push_back(std::move(a));
        const auto act = i + 1 == net.layers() ? net.output : net.hidden;
        a = apply_activation(act, z);
        cache.pre.push_back(std::move(z));
    }
    cache.output = std::move(a);
    return cache;
}

Gradients mlp_backward_from_logits(const Mlp& net, const ForwardCache& cache, const Matrix& logit_grad) {
    if (cache.pre.size() != net.layers() || cache.inputs.size() != net.layers())
        throw UsageError("forward cache does not match the network depth");
    for (std::size_t i = 0; i < net.layers(); ++i) {
        if (static_cast<std::size_t>(cache.inputs[i].cols()) != net.dims[i] ||
            static_cast<std::size_t>(cache.pre[i].cols()) != net.dims[i + 1])
            throw UsageError("forward cache shapes do not match the network");
    }
    if (logit_grad.rows() != cache.output.rows() || logit_grad.cols() != cache.output.cols())
        throw UsageError("loss gradient shape does not match the network output");

    Gradients g;
    g.weights.resize(net.layers());
    g.biases.resize(net.layers());
    Matrix delta = logit_grad;
    for (std::size_t i = net.layers(); i-- > 0;) {
        g.weights[i] = cache.inputs[i].transpose() * delta;
        g.biases[i] = delta.colwise().sum().transpose();
        Matrix upstream = delta * net.weights[i].transpose();
        if (i == 0) {
            g.input = std::move(upstream);
        } else {
            delta = activation_backward(net.hidden, cache.pre[i - 1], cache.inputs[i], upstream);
        }
    }
    return g;
}

Gradients mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& loss_grad) {
    if (cache.pre.size() != net.layers())
        throw UsageError("forward cache does not match the network depth");
    if (loss_grad.rows() != cache.output.rows() || loss_grad.cols() != cache.output.cols())
        throw UsageError("loss gradient shape does not match the network output");
    const Matrix dz = activation_backward(net.output, cache.pre.back(), cache.output, loss_grad);
    return mlp_backward_from_logits(net, cache, dz);
}

std::vector<double> flatten(const Mlp& net) {
    std::vector<double> out;
    out.reserve(net.parameter_count());
    for (std::size_t i = 0; i < net.layers(); ++i) {
        for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[i].cols(); ++c) out.push_back(net.weights[i](r, c));
        }
        for (Eigen::Index k = 0; k < net.biases[i].size(); ++k) out.push_back(net.biases[i](k));
    }
    return out;
}

void unflatten(Mlp& net, const std::vector<double>& params) {
    if (params.size() != net.parameter_count())
        throw DataError("expected " + std::to_string(net.parameter_count()) + " parameters, got " +
                        std::to_string(params.size()));
    std::size_t p = 0;
    for (std::size_t i = 0; i < net.layers(); ++i) {
        for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[i].cols(); ++c) net.weights[i](r, c) = params[p++];
        }
        for (Eigen::Index k = 0; k < net.biases[i].size(); ++k) net.biases[i](k) = params[p++];
    }
}

std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
        for (Eigen::Index r = 0; r < g.weights[i].rows(); ++r) {
            for (Eigen::Index c = 0; c < g.weights[i].cols(); ++c) out.push_back(g.weights[i](r, c));
        }
        for (Eigen::Index k = 0; k < g.biases[i].size(); ++k) out.push_back(g.biases[i](k));
    }
    return out;
}

Adam::Adam(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    if (!(learning_rate > 0)) throw UsageError("learning rate must be positive");
    for (std::size_t i = 0; i < net.layers(); ++i) {
        mw_.push_back(Matrix::Zero(net.weights[i].rows(), net.weights[i].cols()));
        vw_.push_back(mw_.back());
        mb_.push_back(Vector::Zero(net.biases[i].size()));
        vb_.push_back(mb_.back());
    }
}

void Adam::step(Mlp& net, const Gradients& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double step = lr_ * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < net.layers(); ++i) {
        mw_[i] = beta1_ * mw_[i] + (1 - beta1_) * grad.weights[i];
        vw_[i] = beta2_ * vw_[i] + (1 - beta2_) * grad.weights[i].cwiseProduct(grad.weights[i]);
        net.weights[i].array() -= step * mw_[i].array() / (vw_[i].array().sqrt() + eps_);
        mb_[i] = beta1_ * mb_[i] + (1 - beta1_) * grad.biases[i];
        vb_[i] = beta2_ * vb_[i] + (1 - beta2_) * grad.biases[i].cwiseProduct(grad.biases[i]);
        net.biases[i].array() -= step * mb_[i].array() / (vb_[i].array().sqrt() + eps_);
    }
}

nlohmann::json mlp_to_json(const Mlp& net) {
    return {{"kind", "mlp"},
            {"dims", net.dims},
            {"hidden_activation", to_string(net.hidden)},
            {"output_activation", to_string(net.output)},
            {"parameters", flatten(net)}};
}

Mlp mlp_from_json(const nlohmann::json& doc) {
    try {
        const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
        Rng unused(0);
        Mlp net = mlp_init(dims, parse_activation(doc.at("hidden_activation").get<std::string>()),
                           parse_activation(doc.at("output_activation").get<std::string>()), unused);
        unflatten(net, doc.at("parameters").get<std::vector<double>>());
        if (!net.finite()) throw DataError("MLP parameters are not finite");
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed MLP: ") + e.what());
    }
}

}  // namespace fairprep
