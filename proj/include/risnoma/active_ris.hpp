#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "risnoma/geometry_channel.hpp"

namespace risnoma {

/// Amplification factors p_m and phase shifts theta_m of the M elements.
struct RisControl {
    std::vector<double> amp;
    std::vector<double> phase;

    /// Everything zero: the surface is switched off.
    static RisControl off(std::size_t m);
    /// Unit amplification, zero phase: a passive surface at rest.
    static RisControl passive(std::size_t m);

    [[nodiscard]] std::size_t elements() const { return amp.size(); }
    /// 0 <= amp <= max_amp and 0 <= phase < 2 pi, element-wise.
    [[nodiscard]] bool valid(double max_amp) const;
};

/// Noise injected by the surface. The static term reaches user k through the
/// RIS->user channel without amplification; it is zero unless configured.
struct RisNoiseParams {
    double sigma_z_sq = 0.0;  // dynamic, amplified noise power per element (W)
    double sigma_s_sq = 0.0;  // static noise power per element (W)
};

/// h_k = h_Bk + sum_m H_Sk[m] p_m e^{j theta_m} H_BS[m]. Throws ShapeError on
/// dimension mismatch.
cdouble equivalent_channel(std::size_t k, const ChannelRealization& ch, const RisControl& ctrl);

/// All K equivalent channels.
std::vector<cdouble> equivalent_channels(const ChannelRealization& ch, const RisControl& ctrl);

/// ||H_Sk P Theta||^2 sigma_z^2 (+ ||H_Sk||^2 sigma_s^2): the surface noise
/// power seen by user k. Independent of the phases.
double ris_noise_power(std::size_t k, const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise);

std::vector<double> ris_noise_powers(const ChannelRealization& ch, const RisControl& ctrl, const RisNoiseParams& noise);

}  // namespace risnoma
