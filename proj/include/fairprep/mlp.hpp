#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "fairprep/encoding.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

enum class Activation { Identity, Relu, Tanh, Sigmoid, Softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

// Fully connected network. Rows of the input are samples; layer i maps
// width dims[i] to dims[i+1] via X * weights[i] + biases[i]^T.
struct Mlp {
    std::vector<std::size_t> dims;
    std::vector<Matrix> weights;  // dims[i] x dims[i+1]
    std::vector<Vector> biases;   // dims[i+1]
    Activation hidden = Activation::Tanh;
    Activation output = Activation::Identity;

    std::size_t layers() const { return weights.size(); }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    std::size_t parameter_count() const;
    bool finite() const;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Draw order:
// layer by layer, row-major within each weight matrix.
Mlp mlp_init(const std::vector<std::size_t>& dims, Activation hidden, Activation output, Rng& rng);

struct ForwardCache {
    std::vector<Matrix> inputs;  // inputs[i] feeds layer i; inputs[0] is X
    std::vector<Matrix> pre;     // pre-activation of each layer
    Matrix output;
};

ForwardCache mlp_forward(const Mlp& net, const Matrix& x);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Matrix input;  // d loss / d X, for chaining networks
};

// `loss_grad` is d loss / d output (post-activation).
Gradients mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& loss_grad);
// Same, but starting from d loss / d pre-activation of the last layer. Used
// with fused softmax/sigmoid cross-entropy gradients.
Gradients mlp_backward_from_logits(const Mlp& net, const ForwardCache& cache, const Matrix& logit_grad);

Matrix apply_activation(Activation a, const Matrix& z);

// Flat parameter view in layer order: W row-major, then b.
std::vector<double> flatten(const Mlp& net);
void unflatten(Mlp& net, const std::vector<double>& params);
std::vector<double> flatten(const Gradients& g);

// Adam with bias correction; one state per network.
class Adam {
public:
    explicit Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);
    void step(Mlp& net, const Gradients& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> mw_, vw_;
    std::vector<Vector> mb_, vb_;
};

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace fairprep
