#include "risnoma/active_ris.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "risnoma/errors.hpp"

namespace risnoma {

RisControl RisControl::off(std::size_t m) {
    return {std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
}

RisControl RisControl::passive(std::size_t m) {
    return {std::vector<double>(m, 1.0), std::vector<double>(m, 0.0)};
}

bool RisControl::valid(double max_amp) const {
    if (amp.size() != phase.size()) {
        return false;
    }
    for (std::size_t m = 0; m < amp.size(); ++m) {
        if (!(amp[m] >= 0.0 && amp[m] <= max_amp)) {
            return false;
        }
        if (!(phase[m] >= 0.0 && phase[m] < 2.0 * std::numbers::pi)) {
            return false;
        }
    }
    return true;
}

namespace {

void check_dims(std::size_t k, const ChannelRealization& ch, const RisControl& ctrl) {
    const auto m = ch.elements();
    if (ctrl.amp.size() != m || ctrl.phase.size() != m) {
        throw ShapeError("RIS control has " + std::to_string(ctrl.amp.size()) + " elements, channel has " +
                         std::to_string(m));
    }
    if (static_cast<std::size_t>(ch.h_ris_user.cols()) != m ||
        static_cast<std::size_t>(ch.h_ris_user.rows()) != ch.users()) {
        throw ShapeError("channel realisation has inconsistent RIS->user dimensions");
    }
    if (k >= ch.users()) {
        throw ShapeError("user index " + std::to_string(k) + " out of range");
    }
}

}  // namespace

cdouble equivalent_channel(std::size_t k, const ChannelRealization& ch, const RisControl& ctrl) {
    check_dims(k, ch, ctrl);
    cdouble cascade{0.0, 0.0};
    for (std::size_t m = 0; m < ch.elements(); ++m) {
        const cdouble reflect = std::polar(ctrl.amp[m], ctrl.phase[m]);
        cascade += ch.h_ris_user(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) * reflect * ch.h_bs_ris[m];
    }
    return ch.h_direct[k] + cascade;
}

std::vector<cdouble> equivalent_channels(const ChannelRealization& ch, const RisControl& ctrl) {
    std::vector<cdouble> out(ch.users());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = equivalent_channel(k, ch, ctrl);
    }
    return out;
}

double ris_noise_power(std::size_t k, const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise) {
    check_dims(k, ch, ctrl);
    double amplified = 0.0;
    double unamplified = 0.0;
    for (std::size_t m = 0; m < ch.elements(); ++m) {
        const double g = std::norm(ch.h_ris_user(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)));
        amplified += g * ctrl.amp[m] * ctrl.amp[m];
        unamplified += g;
    }
    double total = amplified * noise.sigma_z_sq;
    if (noise.sigma_s_sq != 0.0) {
        total += unamplified * noise.sigma_s_sq;
    }
    return total;
}

std::vector<double> ris_noise_powers(const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise) {
    std::vector<double> out(ch.users());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = ris_noise_power(k, ch, ctrl, noise);
    }
    return out;
}

}  // namespace risnoma
