#include "risnoma/noma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "risnoma/errors.hpp"

namespace risnoma {

void NomaParams::validate() const {
    if (p_tx.empty()) {
        throw ConfigError("noma.p_tx: at least one user is required");
    }
    for (double p : p_tx) {
        if (!(p > 0.0)) {
            throw ConfigError("noma.p_tx: transmit powers must be positive");
        }
    }
    if (!(xi > 0.0 && xi <= 1.0)) {
        throw ConfigError("noma.xi: must satisfy 0 < xi <= 1");
    }
    if (!(sigma_sq > 0.0)) {
        throw ConfigError("noma.noise: receiver noise power must be positive");
    }
    if (!(r0 > 0.0)) {
        throw ConfigError("noma.r0: rate threshold must be positive");
    }
}

double SlotRates::sum_rate() const {
    return std::accumulate(rates.begin(), rates.end(), 0.0);
}

namespace {

void check_sizes(std::size_t k, std::size_t h, std::size_t active, std::size_t noise, std::size_t p) {
    if (h != k || active != k || noise != k || p != k) {
        throw ShapeError("noma: per-user vectors disagree on the number of users");
    }
}

}  // namespace

std::vector<double> signal_strengths(const UcsState& ucs, std::span<const cdouble> h, const NomaParams& params) {
    const auto k_users = h.size();
    if (ucs.active.size() != k_users || params.p_tx.size() != k_users) {
        throw ShapeError("signal_strengths: per-user vectors disagree on the number of users");
    }
    std::vector<double> g(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        g[k] = ucs.active[k] ? std::norm(h[k]) * params.p_tx[k] : 0.0;
    }
    return g;
}

SlotRates sic_decode(std::span<const double> strengths, std::span<const cdouble> h, const UcsState& ucs,
                     std::span<const double> ris_noise, const NomaParams& params) {
    const auto k_users = strengths.size();
    check_sizes(k_users, h.size(), ucs.active.size(), ris_noise.size(), params.p_tx.size());

    SlotRates out;
    out.rates.assign(k_users, 0.0);
    out.decoded.assign(k_users, 0);
    for (std::size_t k = 0; k < k_users; ++k) {
        if (ucs.active[k]) {
            out.order.push_back(k);
        }
    }
    out.active = out.order.size();
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return strengths[a] > strengths[b]; });

    std::vector<double> received(k_users);
    for (std::size_t j = 0; j < k_users; ++j) {
        received[j] = std::norm(h[j]) * params.p_tx[j];
    }

    for (const std::size_t k : out.order) {
        double interference = 0.0;
        for (std::size_t j = 0; j < k_users; ++j) {
            if (j == k || !ucs.active[j]) {
                continue;
            }
            const double chi = received[j] > received[k] ? 1.0 : 0.0;
            const double d = out.decoded[j] ? 1.0 : 0.0;
            interference += (1.0 - chi * d * params.xi) * received[j];
        }
        const double rate = std::log2(1.0 + strengths[k] / (interference + ris_noise[k] + params.sigma_sq));
        out.rates[k] = rate;
        if (rate >= params.r0) {
            out.decoded[k] = 1;
            ++out.successes;
        }
    }
    return out;
}

double success_ratio(const SlotRates& slot) {
    if (slot.active == 0) {
        return 1.0;
    }
    return static_cast<double>(slot.successes) / static_cast<double>(slot.active);
}

SlotRates oma_rates(const UcsState& ucs, std::span<const cdouble> h, std::span<const double> ris_noise,
                    const NomaParams& params) {
    const auto k_users = h.size();
    check_sizes(k_users, h.size(), ucs.active.size(), ris_noise.size(), params.p_tx.size());
    const auto g = signal_strengths(ucs, h, params);

    SlotRates out;
    out.rates.assign(k_users, 0.0);
    out.decoded.assign(k_users, 0);
    for (std::size_t k = 0; k < k_users; ++k) {
        if (ucs.active[k]) {
            out.order.push_back(k);
        }
    }
    out.active = out.order.size();
    if (out.active == 0) {
        return out;
    }
    const double share = 1.0 / static_cast<double>(out.active);
    for (const std::size_t k : out.order) {
        const double rate = share * std::log2(1.0 + g[k] / (ris_noise[k] + params.sigma_sq));
        out.rates[k] = rate;
        if (rate >= params.r0) {
            out.decoded[k] = 1;
            ++out.successes;
        }
    }
    return out;
}

}  // namespace risnoma
