#include "risnoma/energy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma {

namespace {

double logistic(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace

double harvest_rf(double p_rf, const RfHarvestParams& params) {
    // Both terms go through logistic() so that p_rf = 0 cancels exactly.
    const double omega = logistic(-(params.a * params.b));
    const double psi = params.e_max * logistic(params.a * (p_rf - params.b));
    const double out = (psi - params.e_max * omega) / (1.0 - omega);
    return std::clamp(out, 0.0, params.e_max);
}

double harvest_solar(double t_hours, const SolarParams& params) {
    const double shifted = t_hours + params.a2;
    const double irradiance = params.a1 * shifted * shifted + params.a3;
    return std::max(0.0, params.s_sol * irradiance * (1.0 - params.sigma_sol));
}

double ris_consumption(const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise) {
    if (ctrl.amp.size() != ch.elements()) {
        throw ShapeError("ris_consumption: control and channel disagree on the element count");
    }
    double reflected = 0.0;
    double gain = 0.0;
    for (std::size_t m = 0; m < ch.elements(); ++m) {
        const double a2 = ctrl.amp[m] * ctrl.amp[m];
        reflected += a2 * std::norm(ch.h_bs_ris[m]);
        gain += a2;
    }
    return reflected + gain * noise.sigma_z_sq;
}

double unit_amplitude_consumption(const ChannelRealization& ch, const RisNoiseParams& noise) {
    double reflected = 0.0;
    for (const auto& h : ch.h_bs_ris) {
        reflected += std::norm(h);
    }
    return reflected + static_cast<double>(ch.elements()) * noise.sigma_z_sq;
}

EnergyState battery_step(const EnergyState& state, double e_h, double e_c) {
    if (!(e_h >= 0.0) || !(e_c >= 0.0)) {
        throw InvariantViolation(fmt::format("battery_step: negative energy (harvest {}, consumption {})", e_h, e_c));
    }
    if (e_c > state.battery) {
        throw InvariantViolation(
            fmt::format("battery_step: consumption {:.17g} J exceeds stored {:.17g} J", e_c, state.battery));
    }
    EnergyState next = state;
    const double uncapped = state.battery + state.eta * e_h - e_c;
    next.battery = std::min(uncapped, state.e_max_battery);
    next.last_overflow = uncapped - next.battery;
    next.last_harvest = e_h;
    next.last_consume = e_c;
    if (!(next.battery >= 0.0 && next.battery <= next.e_max_battery)) {
        throw InvariantViolation(fmt::format("battery_step: battery {} left [0, {}]", next.battery, next.e_max_battery));
    }
    return next;
}

}  // namespace risnoma
