#pragma once

#include "risnoma/active_ris.hpp"
#include "risnoma/geometry_channel.hpp"

namespace risnoma {

/// Logistic rectifier model. `e_max` is the saturation power; `a` and `b`
/// set the slope and the turn-on point.
struct RfHarvestParams {
    double e_max = 0.024;
    double a = 150.0;
    double b = 0.014;
};

/// Quadratic time-of-day irradiance scaled by panel area and cloud cover.
struct SolarParams {
    double s_sol = 0.0;     // panel area (m^2)
    double a1 = -25.0;      // W/m^2 per h^2
    double a2 = -13.0;      // h, shifts the peak to 13:00
    double a3 = 1000.0;     // W/m^2 at the peak
    double sigma_sol = 0.0; // cloud-cover fraction in [0, 1]
};

/// Battery of the surface. Slots last one second, so W and J coincide.
struct EnergyState {
    double battery = 0.0;        // E(t)
    double e_max_battery = 0.6;  // E_max
    double last_harvest = 0.0;   // e^h of the previous step (before eta)
    double last_consume = 0.0;   // e^c of the previous step
    double last_overflow = 0.0;  // energy discarded at the cap in the previous step
    double eta = 0.9;            // harvesting efficiency
};

double harvest_rf(double p_rf, const RfHarvestParams& params);

/// `t_hours` is the time of day. Negative (night-time) values clamp to zero.
double harvest_solar(double t_hours, const SolarParams& params);

/// e^c = ||P Theta H_BS||^2 + ||P Theta||^2 sigma_z^2.
double ris_consumption(const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise);

/// e^c_0: consumption with unit amplification on every element.
double unit_amplitude_consumption(const ChannelRealization& ch, const RisNoiseParams& noise);

/// E(t+1) = min(E(t) + eta e_h - e_c, E_max). Throws InvariantViolation when
/// e_c exceeds the stored energy or either input is negative.
EnergyState battery_step(const EnergyState& state, double e_h, double e_c);

}  // namespace risnoma
