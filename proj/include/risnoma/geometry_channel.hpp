#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "risnoma/rng.hpp"

namespace risnoma {

using cdouble = std::complex<double>;

struct Position3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

double distance(const Position3D& a, const Position3D& b);

/// Large-scale path loss C0 (d / d0)^-alpha, one exponent per link type.
struct PathLossParams {
    double c0_db = -30.0;
    double alpha_direct = 3.5;
    double alpha_bs_ris = 2.2;
    double alpha_ris_user = 2.2;
    double d0 = 1.0;
};

/// Linear power gain 10^(c0_db/10) * d^-alpha. Throws std::domain_error for
/// d below the 1 m reference distance, which only happens with a broken
/// geometry.
double path_loss(double d, double alpha, double c0_db);

/// Normalised spatial correlation of the RIS elements. Hermitian, PSD, unit
/// diagonal.
struct CorrelationMatrix {
    Eigen::MatrixXcd r;
};

/// Isotropic-scattering (sinc kernel) correlation for `m` elements laid out
/// row-major on a square-ish grid with ceil(sqrt(m)) columns:
/// R[a][b] = sinc(2 d_ab / lambda), sinc(x) = sin(pi x) / (pi x).
/// `element_spacing` is in wavelengths.
CorrelationMatrix correlation_matrix(std::size_t m, double element_spacing);

/// Hermitian PSD square root via eigen-decomposition; negative eigenvalues
/// from round-off are clamped to zero.
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& r);

/// One block-fading draw of every channel in the cell.
struct ChannelRealization {
    std::vector<cdouble> h_direct;   // K, BS -> user k
    std::vector<cdouble> h_bs_ris;   // M, BS -> RIS element m
    Eigen::MatrixXcd h_ris_user;     // K x M, RIS element m -> user k

    [[nodiscard]] std::size_t users() const { return h_direct.size(); }
    [[nodiscard]] std::size_t elements() const { return h_bs_ris.size(); }
};

struct ChannelConfig {
    Position3D bs{0.0, 0.0, 0.0};
    Position3D ris{100.0, 100.0, 50.0};
    std::vector<Position3D> users;
    PathLossParams path_loss;
    double wavelength_m = 0.1;
    double element_spacing_wl = 0.25;
    std::size_t ris_elements = 16;
};

/// Precomputed large-scale statistics for a fixed geometry.
///
/// Direct links are Rayleigh with variance path_loss(d_Bk). The RIS links
/// follow N_C(0, A mu R) where A = (spacing * lambda)^2 is the element area and
/// mu is the path loss per unit of receive aperture, i.e. the isotropic path
/// loss divided by the isotropic antenna aperture lambda^2 / (4 pi).
class ChannelModel {
public:
    explicit ChannelModel(ChannelConfig cfg);

    /// Draw order: K direct taps, M BS->RIS taps, then K rows of M RIS->user
    /// taps. Identical generator state gives a bitwise identical realisation.
    ChannelRealization sample(CounterRng& rng) const;

    [[nodiscard]] std::size_t users() const { return cfg_.users.size(); }
    [[nodiscard]] std::size_t elements() const { return cfg_.ris_elements; }
    [[nodiscard]] double element_area() const { return element_area_; }
    [[nodiscard]] double direct_gain(std::size_t k) const { return direct_gain_.at(k); }
    /// A * mu for the BS->RIS hop.
    [[nodiscard]] double bs_ris_variance() const { return bs_ris_variance_; }
    /// A * mu for the RIS->user k hop.
    [[nodiscard]] double ris_user_variance(std::size_t k) const { return ris_user_variance_.at(k); }
    [[nodiscard]] const CorrelationMatrix& correlation() const { return correlation_; }
    [[nodiscard]] const ChannelConfig& config() const { return cfg_; }

private:
    std::vector<cdouble> correlated_draw(CounterRng& rng, double variance) const;

    ChannelConfig cfg_;
    double element_area_ = 0.0;
    std::vector<double> direct_gain_;
    double bs_ris_variance_ = 0.0;
    std::vector<double> ris_user_variance_;
    CorrelationMatrix correlation_;
    Eigen::MatrixXcd sqrt_r_;
};

/// Free-function form of ChannelModel::sample.
ChannelRealization sample_channels(CounterRng& rng, const ChannelModel& model);

/// Users uniformly placed (by area) in the half annulus x >= 0 between the two
/// radii around the BS, at ground level.
std::vector<Position3D> place_users(std::size_t k, double radius_min, double radius_max, CounterRng& rng);

}  // namespace risnoma
