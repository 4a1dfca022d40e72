#include "risnoma/neural/dense.hpp"

#include <cmath>

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma::nn {

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError(fmt::format("unknown activation '{}'", name));
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return sigmoid(z);
        case Activation::tanh: return std::tanh(z);
    }
    return z;
}

double activate_grad(Activation a, double z, double y) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::tanh: return 1.0 - y * y;
    }
    return 1.0;
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : weights_(out, in), bias_(1, out), grad_weights_(out, in), grad_bias_(1, out), act_(act) {
    if (in == 0 || out == 0) {
        throw ShapeError("DenseLayer: zero-sized layer");
    }
}

void DenseLayer::init(CounterRng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in() + out()));
    for (auto& w : weights_.values()) {
        w = rng.uniform(-limit, limit);
    }
    bias_.fill(0.0);
}

Tensor2 DenseLayer::infer(const Tensor2& x) const {
    if (x.cols() != in()) {
        throw ShapeError(fmt::format("DenseLayer: input {} for a layer with {} inputs", x.shape_string(), in()));
    }
    Tensor2 y = matmul_nt(x, weights_);
    add_row_broadcast(y, bias_);
    if (act_ != Activation::identity) {
        for (auto& v : y.values()) {
            v = activate(act_, v);
        }
    }
    check_finite(y, "dense forward");
    return y;
}

Tensor2 DenseLayer::forward(const Tensor2& x) {
    if (x.cols() != in()) {
        throw ShapeError(fmt::format("DenseLayer: input {} for a layer with {} inputs", x.shape_string(), in()));
    }
    Cache c;
    c.input = x;
    c.pre = matmul_nt(x, weights_);
    add_row_broadcast(c.pre, bias_);
    c.post = c.pre;
    if (act_ != Activation::identity) {
        for (auto& v : c.post.values()) {
            v = activate(act_, v);
        }
    }
    check_finite(c.post, "dense forward");
    Tensor2 y = c.post;
    cache_ = std::move(c);
    return y;
}

Tensor2 DenseLayer::backward(const Tensor2& grad_out) {
    if (!cache_) {
        throw InvariantViolation("DenseLayer::backward called without a forward cache");
    }
    const Cache& c = *cache_;
    if (!grad_out.same_shape(c.post)) {
        throw ShapeError(fmt::format("DenseLayer::backward: gradient {} vs output {}", grad_out.shape_string(),
                                     c.post.shape_string()));
    }
    Tensor2 dz = grad_out;
    if (act_ != Activation::identity) {
        auto d = dz.values();
        const auto z = c.pre.values();
        const auto y = c.post.values();
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] *= activate_grad(act_, z[i], y[i]);
        }
    }
    add_matmul_tn(grad_weights_, dz, c.input);
    add_column_sums(grad_bias_, dz);
    Tensor2 dx = matmul(dz, weights_);
    check_finite(dx, "dense backward");
    cache_.reset();
    return dx;
}

void DenseLayer::collect(ParamList& out, const std::string& prefix) {
    out.push_back({prefix + "weight", &weights_, &grad_weights_});
    out.push_back({prefix + "bias", &bias_, &grad_bias_});
}

Mlp::Mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output) {
    if (sizes.size() < 2) {
        throw ShapeError("Mlp: need at least input and output sizes");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const bool last = i + 2 == sizes.size();
        layers_.emplace_back(sizes[i], sizes[i + 1], last ? output : hidden);
    }
}

void Mlp::init(CounterRng& rng) {
    for (auto& l : layers_) {
        l.init(rng);
    }
}

Tensor2 Mlp::forward(const Tensor2& x) {
    Tensor2 h = x;
    for (auto& l : layers_) {
        h = l.forward(h);
    }
    return h;
}

Tensor2 Mlp::infer(const Tensor2& x) const {
    Tensor2 h = x;
    for (const auto& l : layers_) {
        h = l.infer(h);
    }
    return h;
}

Tensor2 Mlp::backward(const Tensor2& grad_out) {
    Tensor2 g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = it->backward(g);
    }
    return g;
}

ParamList Mlp::parameters() {
    ParamList out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].collect(out, fmt::format("layer{}.", i));
    }
    return out;
}

void Mlp::zero_grad() {
    zero_grads(parameters());
}

double mse_loss(const Tensor2& pred, const Tensor2& target, Tensor2* grad) {
    if (!pred.same_shape(target)) {
        throw ShapeError(fmt::format("mse_loss: prediction {} vs target {}", pred.shape_string(), target.shape_string()));
    }
    const auto n = static_cast<double>(pred.size());
    double sum = 0.0;
    if (grad != nullptr) {
        *grad = Tensor2(pred.rows(), pred.cols());
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred.data()[i] - target.data()[i];
        sum += e * e;
        if (grad != nullptr) {
            grad->data()[i] = 2.0 * e / n;
        }
    }
    return sum / n;
}

}  // namespace risnoma::nn
