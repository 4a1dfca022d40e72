#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "risnoma/ddpg.hpp"
#include "risnoma/env.hpp"
#include "risnoma/geometry_channel.hpp"
#include "risnoma/predictor.hpp"

namespace risnoma {

enum class PolicyKind { ddpg, ac, random, off };

PolicyKind parse_policy(const std::string& s);
std::string to_string(PolicyKind p);

/// Users scattered in the half annulus in front of the BS.
struct PlacementConfig {
    std::size_t count = 4;
    double radius_min = 200.0;
    double radius_max = 500.0;
    std::uint64_t seed = 11;
};

struct GeometryConfig {
    Position3D bs{0.0, 0.0, 0.0};
    Position3D ris{100.0, 100.0, 50.0};
    std::vector<Position3D> users;  // explicit positions win over placement
    PlacementConfig placement;

    [[nodiscard]] std::vector<Position3D> resolve_users() const;
};

/// Data used to fit the activity predictor before any policy runs.
struct PredictorTraining {
    std::size_t series_length = 1000;
    double split = 0.7;
    std::uint64_t series_seed = 1;
};

struct SweepConfig {
    std::string axis;  // "K", "R0", "L" or "M"; empty when no sweep is configured
    std::vector<double> values;
    bool retrain = true;
};

struct ExperimentConfig {
    std::string name = "default";
    std::uint64_t seed = 1;

    GeometryConfig geometry;
    PathLossParams path_loss;
    double wavelength_m = 0.1;
    double element_spacing_wl = 0.25;
    std::size_t ris_elements = 16;

    EnvConfig env;
    PredictorConfig predictor;
    PredictorTraining predictor_data;
    bool use_predictor = true;

    DdpgConfig ddpg;
    PolicyKind policy = PolicyKind::ddpg;
    std::size_t episodes = 200;
    std::size_t steps = 200;
    std::size_t eval_episodes = 10;
    std::uint64_t eval_first_episode = 1000000;

    SweepConfig sweep;
    std::string output_dir = "out";

    /// Cross-field checks; throws ConfigError naming the field.
    void validate() const;

    [[nodiscard]] ChannelConfig channel_config() const;
    [[nodiscard]] std::size_t users() const;
};

/// Built-in defaults for every setting (see README for the assumed values).
ExperimentConfig default_config();

/// Parses a JSON document on top of default_config(). Unknown keys, wrong
/// types and out-of-range values throw ConfigError with the field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON echo of every effective setting.
std::string config_to_json(const ExperimentConfig& cfg);

/// Same config with the run seed (environment and agent streams) replaced.
ExperimentConfig with_seed(ExperimentConfig cfg, std::uint64_t seed);

/// dBm -> W.
double dbm_to_watt(double dbm);

}  // namespace risnoma
