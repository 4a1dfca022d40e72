#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "risnoma/config.hpp"
#include "risnoma/ddpg.hpp"
#include "risnoma/env.hpp"
#include "risnoma/predictor.hpp"

namespace risnoma {

/// A surface type paired with the policy that drives it, e.g. "active-ddpg".
struct Variant {
    RisKind ris = RisKind::active;
    PolicyKind policy = PolicyKind::ddpg;

    [[nodiscard]] std::string name() const;
    [[nodiscard]] bool learned() const { return policy == PolicyKind::ddpg || policy == PolicyKind::ac; }
};

/// "active-ddpg", "passive-random", "none", ... ("none" means no surface).
Variant parse_variant(const std::string& s);
ExperimentConfig with_variant(ExperimentConfig cfg, const Variant& v);
Variant variant_of(const ExperimentConfig& cfg);

/// Per-slot control of a non-learned policy. random: amp ~ U[0, L],
/// phase ~ U[0, 2 pi); off: everything zero. The environment still applies
/// the surface type and the feasibility rule.
RisControl baseline_control(PolicyKind kind, CounterRng& rng, std::size_t m, double max_amp);

/// Build identifier compiled into the binaries (git describe).
std::string build_version();

/// Result of fitting the activity predictors on the configured series.
struct PredictorFit {
    std::shared_ptr<PredictorBank> bank;
    std::vector<std::vector<double>> series;
    std::vector<UcsDataset> train, test;
    std::vector<TrainReport> reports;
    std::vector<std::vector<double>> test_predictions;
    std::vector<double> test_mse, persistence_mse;
};

/// Generates the per-user walks, splits them and trains one model per user.
PredictorFit fit_predictor(const ExperimentConfig& cfg);

/// Trained predictor for this config, memoised in-process and, when
/// `cache_dir` is non-empty, on disk.
std::shared_ptr<const PredictorBank> shared_predictor(const ExperimentConfig& cfg,
                                                      const std::filesystem::path& cache_dir = {});

Environment make_environment(const ExperimentConfig& cfg, const std::filesystem::path& cache_dir = {});

struct RunOptions {
    std::filesystem::path out_dir;         // metrics.csv / summary.json / trace.csv; empty = none
    bool trace = false;
    std::filesystem::path cache_dir;       // trained agents and predictors keyed by config hash
    std::filesystem::path load_checkpoint; // evaluate this agent instead of training
    std::filesystem::path save_checkpoint; // where to store the trained agent
};

struct ExperimentResult {
    Variant variant;
    std::vector<EpisodeMetrics> train;  // learning curve, or plain rollouts for fixed policies
    std::vector<EpisodeMetrics> eval;   // greedy evaluation episodes
    std::shared_ptr<DdpgAgent> agent;   // set for learned policies
    std::uint64_t first_update_step = 0;
};

/// Mean of each metric over a range of episodes.
EpisodeMetrics average(const std::vector<EpisodeMetrics>& rows, std::size_t first, std::size_t count);
EpisodeMetrics first_n(const std::vector<EpisodeMetrics>& rows, std::size_t n);
EpisodeMetrics last_n(const std::vector<EpisodeMetrics>& rows, std::size_t n);

/// Trains (or rolls out) the configured variant and evaluates it.
/// Deterministic in (config, seed).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Rolls out a fixed policy (or a trained agent, when given) for the
/// evaluation episodes of `cfg`.
std::vector<EpisodeMetrics> evaluate(const ExperimentConfig& cfg, const DdpgAgent* agent,
                                     const std::filesystem::path& cache_dir = {});

void write_metrics_csv(std::ostream& out, const ExperimentResult& r);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r);

struct SweepRow {
    std::string axis;
    double value = 0.0;
    std::string variant;
    std::uint64_t seed = 0;
    EpisodeMetrics eval;
};

/// Returns cfg with one sweep axis set: K (user count), R0, L (max_amp) or M
/// (elements).
ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value);

struct SweepOptions {
    std::vector<std::string> variants{"active-ddpg", "active-random", "passive-random", "none"};
    /// Learned variants are retrained per point unless the axis is R0, where
    /// the agent trained at the base config is re-evaluated. With retrain off,
    /// agents are loaded from checkpoint_dir and a missing file is an error.
    bool retrain = true;
    std::filesystem::path checkpoint_dir;
    std::filesystem::path cache_dir;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                const std::vector<double>& values, const SweepOptions& opt);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Checkpoint file used by sweeps for one (variant, axis point, seed).
std::filesystem::path sweep_checkpoint_path(const std::filesystem::path& dir, const std::string& variant,
                                            const std::string& axis, double value, std::uint64_t seed);

/// 64-bit FNV-1a of a string, printed as 16 hex digits.
std::string stable_hash(const std::string& text);

}  // namespace risnoma
