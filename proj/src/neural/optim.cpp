#include "risnoma/neural/optim.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma::nn {

namespace {

void check_grads(const ParamList& params) {
    for (const auto& p : params) {
        if (!p.grad->same_shape(*p.value)) {
            throw ShapeError(fmt::format("optimizer: gradient of '{}' is {} but value is {}", p.name,
                                         p.grad->shape_string(), p.value->shape_string()));
        }
    }
}

}  // namespace

RmsProp::RmsProp(ParamList params, Options opt) : params_(std::move(params)), opt_(opt) {
    if (!(opt_.lr > 0.0) || !(opt_.rho >= 0.0 && opt_.rho < 1.0) || !(opt_.eps > 0.0)) {
        throw ConfigError("RmsProp: need lr > 0, 0 <= rho < 1, eps > 0");
    }
    check_grads(params_);
    for (const auto& p : params_) {
        v_.emplace_back(p.value->rows(), p.value->cols());
    }
}

void RmsProp::step() {
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto theta = params_[k].value->values();
        const auto g = params_[k].grad->values();
        auto v = v_[k].values();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            v[j] = opt_.rho * v[j] + (1.0 - opt_.rho) * g[j] * g[j];
            theta[j] -= opt_.lr * g[j] / std::sqrt(v[j] + opt_.eps);
        }
        check_finite(*params_[k].value, "rmsprop step");
    }
}

Adam::Adam(ParamList params, Options opt) : params_(std::move(params)), opt_(opt) {
    if (!(opt_.lr > 0.0) || !(opt_.beta1 >= 0.0 && opt_.beta1 < 1.0) || !(opt_.beta2 >= 0.0 && opt_.beta2 < 1.0) ||
        !(opt_.eps > 0.0)) {
        throw ConfigError("Adam: need lr > 0, betas in [0, 1), eps > 0");
    }
    check_grads(params_);
    for (const auto& p : params_) {
        m_.emplace_back(p.value->rows(), p.value->cols());
        v_.emplace_back(p.value->rows(), p.value->cols());
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto theta = params_[k].value->values();
        const auto g = params_[k].grad->values();
        auto m = m_[k].values();
        auto v = v_[k].values();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g[j];
            v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g[j] * g[j];
            theta[j] -= opt_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt_.eps);
        }
        check_finite(*params_[k].value, "adam step");
    }
}

}  // namespace risnoma::nn
