#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "risnoma/env.hpp"
#include "risnoma/neural/dense.hpp"
#include "risnoma/neural/optim.hpp"
#include "risnoma/rng.hpp"

namespace risnoma {

struct Experience {
    std::vector<double> s;
    std::vector<double> a;
    double r = 0.0;
    std::vector<double> s_next;
};

/// Fixed-capacity ring buffer of experience tuples.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Experience e);
    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    /// Minimum fill before sampling: ceil(capacity / 3).
    [[nodiscard]] std::size_t warm_size() const { return (capacity_ + 2) / 3; }
    [[nodiscard]] bool ready() const { return size() >= warm_size(); }
    /// Indices of n distinct stored tuples, uniform without replacement.
    std::vector<std::size_t> sample_indices(CounterRng& rng, std::size_t n) const;
    [[nodiscard]] const Experience& at(std::size_t i) const { return items_.at(i); }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> items_;
};

/// n(t) = max(n_ini - t phi, n_end).
struct NoiseSchedule {
    double n_ini = 0.3;
    double n_end = 0.02;
    double phi = 0.0;

    /// phi chosen so the floor is reached after `fraction` of `total_steps`.
    static NoiseSchedule annealed(double n_ini, double n_end, std::uint64_t total_steps, double fraction);
    [[nodiscard]] double stddev(std::uint64_t t) const;
    void validate() const;
};

struct DdpgConfig {
    std::vector<std::size_t> hidden{256, 256, 128};
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double tau = 0.01;
    double gamma = 0.95;
    std::size_t batch = 40;
    std::size_t memory = 10000;
    double noise_ini = 0.3;
    double noise_end = 0.02;
    double noise_anneal_fraction = 0.6;
    /// Rewards are multiplied by this before they reach the critic.
    double reward_scale = 1.0;
    /// false gives the actor-critic baseline: no target networks, no replay,
    /// one online update per step on the latest transition.
    bool use_targets_and_replay = true;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainStats {
    double critic_loss = 0.0;
    double actor_objective = 0.0;
};

class DdpgAgent {
public:
    DdpgAgent(std::size_t state_size, std::size_t action_size, DdpgConfig cfg);

    /// Deterministic actor output mu(s) in [0,1]^{2M}.
    [[nodiscard]] std::vector<double> act_greedy(std::span<const double> state) const;
    /// mu(s) plus Gaussian noise of the scheduled std, clipped to [0,1].
    std::vector<double> act(std::span<const double> state, double noise_std, CounterRng& rng) const;

    /// One minibatch update of critic and actor followed by the soft target
    /// update. No-op (nullopt) until the memory is warm.
    std::optional<TrainStats> train_step(const ReplayMemory& memory, CounterRng& rng);
    /// Update on an explicit batch. Without targets the main networks
    /// bootstrap themselves.
    TrainStats update(std::span<const Experience* const> batch);

    /// Fills the actor's gradients with d(-mean_i Q(s_i, mu(s_i)))/d(theta)
    /// through the current critic, which is left unchanged, and returns the
    /// mean Q.
    double actor_gradient(const nn::Tensor2& states);

    /// theta' <- tau theta + (1 - tau) theta' for both target networks.
    void soft_update(double tau);

    [[nodiscard]] double q_value(std::span<const double> state, std::span<const double> action) const;

    nn::Mlp& actor() { return actor_; }
    nn::Mlp& critic() { return critic_; }
    nn::Mlp& target_actor() { return target_actor_; }
    nn::Mlp& target_critic() { return target_critic_; }
    [[nodiscard]] const DdpgConfig& config() const { return cfg_; }
    [[nodiscard]] std::size_t state_size() const { return state_size_; }
    [[nodiscard]] std::size_t action_size() const { return action_size_; }
    [[nodiscard]] std::uint64_t updates() const { return updates_; }

    void save(const std::filesystem::path& path);
    void load(const std::filesystem::path& path);

private:
    nn::ParamList all_parameters();

    std::size_t state_size_;
    std::size_t action_size_;
    DdpgConfig cfg_;
    nn::Mlp actor_, critic_, target_actor_, target_critic_;
    nn::Adam actor_opt_, critic_opt_;
    std::uint64_t updates_ = 0;
};

/// Per-episode aggregate.
struct EpisodeMetrics {
    std::uint64_t episode = 0;
    double mean_reward = 0.0;
    double mean_ratio = 0.0;      // over non-vacuous slots
    double mean_sum_rate = 0.0;   // bits/s/Hz
    double mean_battery = 0.0;    // J
    std::size_t vacuous = 0;
    std::size_t steps = 0;
};

/// Streams one episode's steps into the aggregate.
class EpisodeAccumulator {
public:
    explicit EpisodeAccumulator(std::uint64_t episode) { m_.episode = episode; }
    void add(const StepOutcome& o);
    [[nodiscard]] EpisodeMetrics finish() const;

private:
    EpisodeMetrics m_;
    double ratio_sum_ = 0.0;
    std::size_t ratio_n_ = 0;
};

using StepObserver = std::function<void(std::uint64_t episode, std::uint64_t step, const StepOutcome&)>;

struct TrainingResult {
    std::vector<EpisodeMetrics> episodes;
    std::uint64_t first_update_step = 0;  // 1-based global step of the first update, 0 if none
};

/// The full training loop: observe, act with annealed noise, step, store the
/// executed action, update once the memory is warm.
TrainingResult run_training(Environment& env, DdpgAgent& agent, std::size_t episodes, std::size_t steps,
                            const StepObserver& observer = {});

/// Runs a fixed agent greedily (no noise, no learning).
std::vector<EpisodeMetrics> run_greedy(Environment& env, const DdpgAgent& agent, std::size_t episodes,
                                       std::size_t steps, std::uint64_t first_episode = 0,
                                       const StepObserver& observer = {});

}  // namespace risnoma
