#pragma once

#include <string>
#include <vector>

#include "risnoma/neural/tensor.hpp"

namespace risnoma::nn {

/// Non-owning handle to a trainable tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor2* value = nullptr;
    Tensor2* grad = nullptr;
};

using ParamList = std::vector<ParamRef>;

void zero_grads(const ParamList& params);

/// Total number of scalar parameters.
std::size_t parameter_count(const ParamList& params);

/// target <- tau * source + (1 - tau) * target, parameter by parameter.
/// Lists must agree in length and shapes.
void soft_update(const ParamList& source, const ParamList& target, double tau);

/// target <- source.
void copy_params(const ParamList& source, const ParamList& target);

}  // namespace risnoma::nn
