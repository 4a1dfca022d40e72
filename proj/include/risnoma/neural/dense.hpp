#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "risnoma/neural/param.hpp"
#include "risnoma/neural/tensor.hpp"
#include "risnoma/rng.hpp"

namespace risnoma::nn {

enum class Activation { identity, relu, sigmoid, tanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

double activate(Activation a, double z);
/// Derivative expressed through the pre-activation z and output y = act(z).
double activate_grad(Activation a, double z, double y);

double sigmoid(double z);

/// Fully connected layer y = act(x W^T + b). Inputs are (batch x in).
class DenseLayer {
public:
    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation act);

    /// Xavier-uniform weights, zero bias.
    void init(CounterRng& rng);

    /// Forward pass that keeps what backward needs.
    Tensor2 forward(const Tensor2& x);
    /// Forward pass without touching the cache.
    [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
    /// Accumulates parameter gradients and returns dL/dx. Consumes the cache.
    Tensor2 backward(const Tensor2& grad_out);

    [[nodiscard]] std::size_t in() const { return weights_.cols(); }
    [[nodiscard]] std::size_t out() const { return weights_.rows(); }
    [[nodiscard]] Activation activation() const { return act_; }

    Tensor2& weights() { return weights_; }
    Tensor2& bias() { return bias_; }
    [[nodiscard]] const Tensor2& weights() const { return weights_; }
    [[nodiscard]] const Tensor2& bias() const { return bias_; }

    void collect(ParamList& out, const std::string& prefix);

private:
    struct Cache {
        Tensor2 input;
        Tensor2 pre;
        Tensor2 post;
    };

    Tensor2 weights_;  // out x in
    Tensor2 bias_;     // 1 x out
    Tensor2 grad_weights_;
    Tensor2 grad_bias_;
    Activation act_ = Activation::identity;
    std::optional<Cache> cache_;
};

/// Stack of dense layers.
class Mlp {
public:
    Mlp() = default;
    /// sizes = {in, h1, ..., out}; hidden layers use `hidden`, the last `output`.
    Mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output);

    void init(CounterRng& rng);
    Tensor2 forward(const Tensor2& x);
    [[nodiscard]] Tensor2 infer(const Tensor2& x) const;
    Tensor2 backward(const Tensor2& grad_out);

    ParamList parameters();
    void zero_grad();

    [[nodiscard]] std::size_t in() const { return layers_.front().in(); }
    [[nodiscard]] std::size_t out() const { return layers_.back().out(); }
    [[nodiscard]] std::size_t depth() const { return layers_.size(); }
    DenseLayer& layer(std::size_t i) { return layers_.at(i); }

private:
    std::vector<DenseLayer> layers_;
};

/// Mean squared error over every entry and its gradient w.r.t. `pred`.
double mse_loss(const Tensor2& pred, const Tensor2& target, Tensor2* grad = nullptr);

}  // namespace risnoma::nn
