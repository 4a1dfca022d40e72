#include "risnoma/geometry_channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "risnoma/errors.hpp"

namespace risnoma {

double distance(const Position3D& a, const Position3D& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double path_loss(double d, double alpha, double c0_db) {
    if (!(d >= 1.0)) {
        throw std::domain_error("path_loss: distance " + std::to_string(d) + " m is below the 1 m reference");
    }
    return std::pow(10.0, c0_db / 10.0) * std::pow(d, -alpha);
}

namespace {

double sinc(double x) {
    if (x == 0.0) {
        return 1.0;
    }
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace

CorrelationMatrix correlation_matrix(std::size_t m, double element_spacing) {
    if (m == 0) {
        throw ConfigError("correlation_matrix: element count must be positive");
    }
    if (!(element_spacing > 0.0)) {
        throw ConfigError("correlation_matrix: element spacing must be positive");
    }
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    CorrelationMatrix out{Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const double dx = static_cast<double>(a % cols) - static_cast<double>(b % cols);
            const double dy = static_cast<double>(a / cols) - static_cast<double>(b / cols);
            const double d_wl = element_spacing * std::sqrt(dx * dx + dy * dy);
            const double v = sinc(2.0 * d_wl);
            out.r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
            out.r(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
        }
    }
    return out;
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& r) {
    const Eigen::MatrixXcd herm = 0.5 * (r + r.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
    if (solver.info() != Eigen::Success) {
        throw InvariantViolation("psd_sqrt: eigen-decomposition failed");
    }
    Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().adjoint();
}

ChannelModel::ChannelModel(ChannelConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.ris_elements == 0) {
        throw ConfigError("channel: ris_elements must be >= 1");
    }
    if (!(cfg_.wavelength_m > 0.0)) {
        throw ConfigError("channel: wavelength_m must be positive");
    }
    const auto& pl = cfg_.path_loss;
    const double spacing_m = cfg_.element_spacing_wl * cfg_.wavelength_m;
    element_area_ = spacing_m * spacing_m;
    const double aperture = cfg_.wavelength_m * cfg_.wavelength_m / (4.0 * std::numbers::pi);

    for (const auto& u : cfg_.users) {
        direct_gain_.push_back(path_loss(distance(cfg_.bs, u), pl.alpha_direct, pl.c0_db));
        const double mu = path_loss(distance(cfg_.ris, u), pl.alpha_ris_user, pl.c0_db) / aperture;
        ris_user_variance_.push_back(element_area_ * mu);
    }
    const double mu_bs = path_loss(distance(cfg_.bs, cfg_.ris), pl.alpha_bs_ris, pl.c0_db) / aperture;
    bs_ris_variance_ = element_area_ * mu_bs;

    correlation_ = correlation_matrix(cfg_.ris_elements, cfg_.element_spacing_wl);
    sqrt_r_ = psd_sqrt(correlation_.r);
}

std::vector<cdouble> ChannelModel::correlated_draw(CounterRng& rng, double variance) const {
    const auto m = cfg_.ris_elements;
    std::vector<cdouble> w(m);
    for (auto& x : w) {
        x = rng.complex_normal();
    }
    const double scale = std::sqrt(variance);
    std::vector<cdouble> out(m);
    // Plain loops keep the summation order fixed across platforms.
    for (std::size_t a = 0; a < m; ++a) {
        cdouble acc{0.0, 0.0};
        for (std::size_t b = 0; b < m; ++b) {
            acc += sqrt_r_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * w[b];
        }
        out[a] = scale * acc;
    }
    return out;
}

ChannelRealization ChannelModel::sample(CounterRng& rng) const {
    const auto k_users = users();
    const auto m = elements();
    ChannelRealization ch;
    ch.h_direct.resize(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        ch.h_direct[k] = std::sqrt(direct_gain_[k]) * rng.complex_normal();
    }
    ch.h_bs_ris = correlated_draw(rng, bs_ris_variance_);
    ch.h_ris_user.resize(static_cast<Eigen::Index>(k_users), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < k_users; ++k) {
        const auto row = correlated_draw(rng, ris_user_variance_[k]);
        for (std::size_t j = 0; j < m; ++j) {
            ch.h_ris_user(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    return ch;
}

ChannelRealization sample_channels(CounterRng& rng, const ChannelModel& model) {
    return model.sample(rng);
}

std::vector<Position3D> place_users(std::size_t k, double radius_min, double radius_max, CounterRng& rng) {
    if (!(radius_min >= 1.0) || !(radius_max >= radius_min)) {
        throw ConfigError("place_users: need 1 <= radius_min <= radius_max");
    }
    std::vector<Position3D> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double r2 = rng.uniform(radius_min * radius_min, radius_max * radius_max);
        const double r = std::sqrt(r2);
        const double angle = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
        out.push_back({r * std::cos(angle), r * std::sin(angle), 0.0});
    }
    return out;
}

}  // namespace risnoma
