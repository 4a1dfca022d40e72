#include "risnoma/neural/param.hpp"

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma::nn {

namespace {

void check_pairing(const ParamList& source, const ParamList& target, const char* op) {
    if (source.size() != target.size()) {
        throw ShapeError(fmt::format("{}: {} source tensors vs {} target tensors", op, source.size(), target.size()));
    }
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (!source[i].value->same_shape(*target[i].value)) {
            throw ShapeError(fmt::format("{}: tensor '{}' is {} but target is {}", op, source[i].name,
                                         source[i].value->shape_string(), target[i].value->shape_string()));
        }
    }
}

}  // namespace

void zero_grads(const ParamList& params) {
    for (const auto& p : params) {
        p.grad->fill(0.0);
    }
}

std::size_t parameter_count(const ParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) {
        n += p.value->size();
    }
    return n;
}

void soft_update(const ParamList& source, const ParamList& target, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw ConfigError(fmt::format("soft_update: tau = {} outside [0, 1]", tau));
    }
    check_pairing(source, target, "soft_update");
    for (std::size_t i = 0; i < source.size(); ++i) {
        auto src = source[i].value->values();
        auto dst = target[i].value->values();
        for (std::size_t j = 0; j < dst.size(); ++j) {
            dst[j] = tau * src[j] + (1.0 - tau) * dst[j];
        }
    }
}

void copy_params(const ParamList& source, const ParamList& target) {
    check_pairing(source, target, "copy_params");
    for (std::size_t i = 0; i < source.size(); ++i) {
        *target[i].value = *source[i].value;
    }
}

}  // namespace risnoma::nn
