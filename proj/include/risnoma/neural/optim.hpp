#pragma once

#include <vector>

#include "risnoma/neural/param.hpp"

namespace risnoma::nn {

/// v <- rho v + (1 - rho) g^2;  theta <- theta - lr g / sqrt(v + eps)
class RmsProp {
public:
    struct Options {
        double lr = 1e-3;
        double rho = 0.9;
        double eps = 1e-8;
    };

    RmsProp(ParamList params, Options opt);

    void step();
    [[nodiscard]] const Options& options() const { return opt_; }
    void set_lr(double lr) { opt_.lr = lr; }
    [[nodiscard]] const std::vector<Tensor2>& accumulators() const { return v_; }

private:
    ParamList params_;
    Options opt_;
    std::vector<Tensor2> v_;
};

/// Adam with bias-corrected moments.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(ParamList params, Options opt);

    void step();
    [[nodiscard]] const Options& options() const { return opt_; }
    void set_lr(double lr) { opt_.lr = lr; }
    [[nodiscard]] long steps_taken() const { return t_; }

private:
    ParamList params_;
    Options opt_;
    std::vector<Tensor2> m_;
    std::vector<Tensor2> v_;
    long t_ = 0;
};

}  // namespace risnoma::nn
