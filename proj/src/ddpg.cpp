#include "risnoma/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "risnoma/errors.hpp"
#include "risnoma/neural/checkpoint.hpp"

namespace risnoma {

using nn::Tensor2;

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw ConfigError("ddpg.memory must be >= 1");
    }
    items_.reserve(capacity);
}

void ReplayMemory::push(Experience e) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(e));
    } else {
        items_[next_] = std::move(e);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayMemory::sample_indices(CounterRng& rng, std::size_t n) const {
    if (n > items_.size()) {
        throw InvariantViolation(fmt::format("replay: asked for {} tuples, {} stored", n, items_.size()));
    }
    return rng.sample_without_replacement(items_.size(), n);
}

NoiseSchedule NoiseSchedule::annealed(double n_ini, double n_end, std::uint64_t total_steps, double fraction) {
    NoiseSchedule s;
    s.n_ini = n_ini;
    s.n_end = n_end;
    const double horizon = std::max(1.0, fraction * static_cast<double>(total_steps));
    s.phi = (n_ini - n_end) / horizon;
    if (!(s.phi > 0.0)) {
        // Equal start and floor: any positive slope gives the same schedule.
        s.phi = 1.0;
    }
    return s;
}

double NoiseSchedule::stddev(std::uint64_t t) const {
    return std::max(n_ini - static_cast<double>(t) * phi, n_end);
}

void NoiseSchedule::validate() const {
    if (!(n_ini >= n_end) || !(n_end >= 0.0)) throw ConfigError("ddpg.noise: need n_ini >= n_end >= 0");
    if (!(phi > 0.0)) throw ConfigError("ddpg.noise: phi must be positive");
}

void DdpgConfig::validate() const {
    if (hidden.empty()) throw ConfigError("ddpg.hidden must list at least one layer");
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("ddpg.hidden sizes must be >= 1");
    }
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("ddpg learning rates must be positive");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("ddpg.tau must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("ddpg.gamma must lie in [0, 1)");
    if (batch == 0) throw ConfigError("ddpg.batch must be >= 1");
    if (memory == 0) throw ConfigError("ddpg.memory must be >= 1");
    if (use_targets_and_replay && batch > (memory + 2) / 3) {
        throw ConfigError("ddpg.batch exceeds the warm-up fill of the replay memory");
    }
    if (!(noise_ini >= noise_end) || !(noise_end >= 0.0)) throw ConfigError("ddpg.noise: need n_ini >= n_end >= 0");
    if (!(noise_anneal_fraction > 0.0 && noise_anneal_fraction <= 1.0)) {
        throw ConfigError("ddpg.noise_anneal_fraction must lie in (0, 1]");
    }
    if (!(reward_scale > 0.0)) throw ConfigError("ddpg.reward_scale must be positive");
}

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<std::size_t> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

nn::Mlp make_actor(std::size_t s, std::size_t a, const DdpgConfig& cfg) {
    return {layer_sizes(s, cfg.hidden, a), nn::Activation::relu, nn::Activation::sigmoid};
}

nn::Mlp make_critic(std::size_t s, std::size_t a, const DdpgConfig& cfg) {
    return {layer_sizes(s + a, cfg.hidden, 1), nn::Activation::relu, nn::Activation::identity};
}

nn::Mlp initialised(nn::Mlp net, CounterRng rng) {
    net.init(rng);
    return net;
}

Tensor2 stack_rows(std::span<const Experience* const> batch, std::vector<double> Experience::*field) {
    const std::size_t cols = ((*batch.front()).*field).size();
    Tensor2 t(batch.size(), cols);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& v = (*batch[r]).*field;
        if (v.size() != cols) {
            throw ShapeError("replay: ragged experience vectors");
        }
        std::copy(v.begin(), v.end(), t.row_span(r).begin());
    }
    return t;
}

}  // namespace

DdpgAgent::DdpgAgent(std::size_t state_size, std::size_t action_size, DdpgConfig cfg)
    : state_size_(state_size),
      action_size_(action_size),
      cfg_((cfg.validate(), std::move(cfg))),
      actor_(initialised(make_actor(state_size, action_size, cfg_), CounterRng(cfg_.seed, 0x41435452))),
      critic_(initialised(make_critic(state_size, action_size, cfg_), CounterRng(cfg_.seed, 0x43525443))),
      target_actor_(actor_),
      target_critic_(critic_),
      actor_opt_(actor_.parameters(), {cfg_.actor_lr, 0.9, 0.999, 1e-8}),
      critic_opt_(critic_.parameters(), {cfg_.critic_lr, 0.9, 0.999, 1e-8}) {}

std::vector<double> DdpgAgent::act_greedy(std::span<const double> state) const {
    if (state.size() != state_size_) {
        throw ShapeError(fmt::format("act: state of {} values, expected {}", state.size(), state_size_));
    }
    const Tensor2 a = actor_.infer(Tensor2::row(state));
    return {a.values().begin(), a.values().end()};
}

std::vector<double> DdpgAgent::act(std::span<const double> state, double noise_std, CounterRng& rng) const {
    auto a = act_greedy(state);
    if (noise_std > 0.0) {
        for (auto& v : a) {
            v = std::clamp(v + noise_std * rng.normal(), 0.0, 1.0);
        }
    }
    return a;
}

double DdpgAgent::q_value(std::span<const double> state, std::span<const double> action) const {
    const Tensor2 x = nn::concat_cols(Tensor2::row(state), Tensor2::row(action));
    return critic_.infer(x)(0, 0);
}

TrainStats DdpgAgent::update(std::span<const Experience* const> batch) {
    if (batch.empty()) {
        throw InvariantViolation("ddpg: empty update batch");
    }
    const std::size_t n = batch.size();
    const Tensor2 s = stack_rows(batch, &Experience::s);
    const Tensor2 a = stack_rows(batch, &Experience::a);
    const Tensor2 s2 = stack_rows(batch, &Experience::s_next);
    if (s.cols() != state_size_ || a.cols() != action_size_ || s2.cols() != state_size_) {
        throw ShapeError("ddpg: experience dimensions do not match the agent");
    }

    const nn::Mlp& boot_actor = cfg_.use_targets_and_replay ? target_actor_ : actor_;
    const nn::Mlp& boot_critic = cfg_.use_targets_and_replay ? target_critic_ : critic_;
    const Tensor2 q_next = boot_critic.infer(nn::concat_cols(s2, boot_actor.infer(s2)));
    Tensor2 y(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        y(i, 0) = cfg_.reward_scale * batch[i]->r + cfg_.gamma * q_next(i, 0);
    }

    TrainStats stats;
    critic_.zero_grad();
    const Tensor2 q = critic_.forward(nn::concat_cols(s, a));
    Tensor2 dq;
    stats.critic_loss = nn::mse_loss(q, y, &dq);
    critic_.backward(dq);
    critic_opt_.step();

    stats.actor_objective = actor_gradient(s);
    actor_opt_.step();

    if (cfg_.use_targets_and_replay) {
        soft_update(cfg_.tau);
    }
    ++updates_;
    return stats;
}

double DdpgAgent::actor_gradient(const Tensor2& states) {
    if (states.cols() != state_size_) {
        throw ShapeError("ddpg: state batch has the wrong width");
    }
    const std::size_t n = states.rows();
    actor_.zero_grad();
    const Tensor2 mu = actor_.forward(states);
    const Tensor2 q_pi = critic_.forward(nn::concat_cols(states, mu));
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        obj += q_pi(i, 0);
    }
    // Ascent on mean Q: the gradient of -mean Q flows back through the critic.
    const Tensor2 d_in = critic_.backward(Tensor2(n, 1, -1.0 / static_cast<double>(n)));
    actor_.backward(nn::slice_cols(d_in, state_size_, action_size_));
    critic_.zero_grad();
    return obj / static_cast<double>(n);
}

std::optional<TrainStats> DdpgAgent::train_step(const ReplayMemory& memory, CounterRng& rng) {
    if (!memory.ready() || memory.size() < cfg_.batch) {
        return std::nullopt;
    }
    const auto idx = memory.sample_indices(rng, cfg_.batch);
    std::vector<const Experience*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) {
        batch.push_back(&memory.at(i));
    }
    return update(batch);
}

void DdpgAgent::soft_update(double tau) {
    nn::soft_update(actor_.parameters(), target_actor_.parameters(), tau);
    nn::soft_update(critic_.parameters(), target_critic_.parameters(), tau);
}

nn::ParamList DdpgAgent::all_parameters() {
    nn::ParamList all;
    const auto add = [&all](nn::Mlp& net, const char* prefix) {
        for (auto p : net.parameters()) {
            p.name = std::string(prefix) + p.name;
            all.push_back(p);
        }
    };
    add(actor_, "actor.");
    add(critic_, "critic.");
    add(target_actor_, "target_actor.");
    add(target_critic_, "target_critic.");
    return all;
}

void DdpgAgent::save(const std::filesystem::path& path) {
    nn::save_checkpoint(path, all_parameters(),
                        fmt::format(R"({{"kind":"ddpg","state_size":{},"action_size":{},"updates":{}}})", state_size_,
                                    action_size_, updates_));
}

void DdpgAgent::load(const std::filesystem::path& path) {
    nn::load_checkpoint(path, all_parameters());
}

void EpisodeAccumulator::add(const StepOutcome& o) {
    ++m_.steps;
    m_.mean_reward += o.reward;
    m_.mean_sum_rate += o.slot.sum_rate();
    m_.mean_battery += o.energy.battery;
    if (o.vacuous) {
        ++m_.vacuous;
    } else {
        ratio_sum_ += o.ratio;
        ++ratio_n_;
    }
}

EpisodeMetrics EpisodeAccumulator::finish() const {
    EpisodeMetrics m = m_;
    if (m.steps > 0) {
        const auto n = static_cast<double>(m.steps);
        m.mean_reward /= n;
        m.mean_sum_rate /= n;
        m.mean_battery /= n;
    }
    // An episode made only of vacuous slots counts as fully successful.
    m.mean_ratio = ratio_n_ > 0 ? ratio_sum_ / static_cast<double>(ratio_n_) : 1.0;
    return m;
}

TrainingResult run_training(Environment& env, DdpgAgent& agent, std::size_t episodes, std::size_t steps,
                            const StepObserver& observer) {
    const auto& cfg = agent.config();
    if (env.state_size() != agent.state_size() || env.action_size() != agent.action_size()) {
        throw ShapeError("run_training: agent and environment dimensions differ");
    }
    const auto noise = NoiseSchedule::annealed(cfg.noise_ini, cfg.noise_end,
                                               static_cast<std::uint64_t>(episodes) * steps, cfg.noise_anneal_fraction);
    CounterRng noise_rng(cfg.seed, 0x4e4f4953);
    CounterRng replay_rng(cfg.seed, 0x5245504c);
    ReplayMemory memory(cfg.use_targets_and_replay ? cfg.memory : 1);
    const double e_max = env.config().e_max;

    TrainingResult result;
    std::uint64_t t = 0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        MdpState s = env.reset(ep);
        EpisodeAccumulator acc(ep);
        for (std::size_t k = 0; k < steps; ++k, ++t) {
            const auto feat = s.features(e_max);
            const auto raw = agent.act(feat, noise.stddev(t), noise_rng);
            const StepOutcome o = env.step(raw);
            acc.add(o);
            if (observer) {
                observer(ep, k, o);
            }
            Experience e{feat, o.executed_raw, o.reward, o.next_state.features(e_max)};
            if (cfg.use_targets_and_replay) {
                memory.push(std::move(e));
                if (agent.train_step(memory, replay_rng) && result.first_update_step == 0) {
                    result.first_update_step = t + 1;
                }
            } else {
                const Experience* one[] = {&e};
                agent.update(one);
                if (result.first_update_step == 0) {
                    result.first_update_step = t + 1;
                }
            }
            s = o.next_state;
        }
        result.episodes.push_back(acc.finish());
    }
    return result;
}

std::vector<EpisodeMetrics> run_greedy(Environment& env, const DdpgAgent& agent, std::size_t episodes,
                                       std::size_t steps, std::uint64_t first_episode, const StepObserver& observer) {
    std::vector<EpisodeMetrics> out;
    const double e_max = env.config().e_max;
    for (std::size_t i = 0; i < episodes; ++i) {
        const std::uint64_t ep = first_episode + i;
        MdpState s = env.reset(ep);
        EpisodeAccumulator acc(ep);
        for (std::size_t k = 0; k < steps; ++k) {
            const StepOutcome o = env.step(agent.act_greedy(s.features(e_max)));
            acc.add(o);
            if (observer) {
                observer(ep, k, o);
            }
            s = o.next_state;
        }
        out.push_back(acc.finish());
    }
    return out;
}

}  // namespace risnoma
