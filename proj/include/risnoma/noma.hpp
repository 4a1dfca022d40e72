#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "risnoma/geometry_channel.hpp"
#include "risnoma/ucs.hpp"

namespace risnoma {

struct NomaParams {
    std::vector<double> p_tx;  // W per user
    double xi = 0.9;           // SIC quality, 1 = perfect cancellation
    double sigma_sq = 1e-14;   // receiver noise power (W)
    double r0 = 0.6;           // QoS threshold (bits/s/Hz)
    double bandwidth_hz = 1e6; // reporting only

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Outcome of one slot of downlink decoding.
struct SlotRates {
    std::vector<double> rates;          // bits/s/Hz, 0 for silent users
    std::vector<std::uint8_t> decoded;  // d_k: rate met the threshold
    std::vector<std::size_t> order;     // decode order over active users
    std::size_t successes = 0;
    std::size_t active = 0;

    [[nodiscard]] double sum_rate() const;
};

/// g_k = U_k |h_k|^2 p_k.
std::vector<double> signal_strengths(const UcsState& ucs, std::span<const cdouble> h, const NomaParams& params);

/// Successive interference cancellation with imperfect cancellation.
///
/// Active users are decoded in descending g_k (ties by user index). While
/// decoding user k, every other active user j contributes
/// (1 - chi_jk d_j xi) |h_j|^2 p_j of interference, where chi_jk = 1 iff
/// |h_j|^2 p_j > |h_k|^2 p_k strictly and d_j marks an earlier successful
/// decode. Failed users stay full interferers and decoding continues.
SlotRates sic_decode(std::span<const double> strengths, std::span<const cdouble> h, const UcsState& ucs,
                     std::span<const double> ris_noise, const NomaParams& params);

/// successes / active; a slot with no active user counts as 1.0 (vacuous).
double success_ratio(const SlotRates& slot);

/// Equal-share TDMA comparator: each of the N active users gets 1/N of the
/// slot without interference.
SlotRates oma_rates(const UcsState& ucs, std::span<const cdouble> h, std::span<const double> ris_noise,
                    const NomaParams& params);

}  // namespace risnoma
