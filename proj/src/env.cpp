#include "risnoma/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kEnvStream = 0x454e56;
}  // namespace

RisKind parse_ris_kind(const std::string& s) {
    if (s == "active") return RisKind::active;
    if (s == "passive") return RisKind::passive;
    if (s == "none") return RisKind::none;
    throw ConfigError(fmt::format("ris: unknown kind '{}' (active, passive, none)", s));
}

AccessMode parse_access_mode(const std::string& s) {
    if (s == "noma") return AccessMode::noma;
    if (s == "oma") return AccessMode::oma;
    throw ConfigError(fmt::format("mode: unknown access mode '{}' (noma, oma)", s));
}

std::string to_string(RisKind k) {
    switch (k) {
        case RisKind::active: return "active";
        case RisKind::passive: return "passive";
        case RisKind::none: return "none";
    }
    return "?";
}

std::string to_string(AccessMode m) {
    return m == AccessMode::noma ? "noma" : "oma";
}

void EnvConfig::validate(std::size_t k_users) const {
    noma.validate();
    if (noma.p_tx.size() != k_users) {
        throw ConfigError(fmt::format("power.p_tx: {} entries for {} users", noma.p_tx.size(), k_users));
    }
    if (!(max_amp >= 1.0)) throw ConfigError("ris.max_amp (L) must be >= 1");
    if (!(ris_noise.sigma_z_sq >= 0.0) || !(ris_noise.sigma_s_sq >= 0.0)) {
        throw ConfigError("noise: RIS noise powers must be non-negative");
    }
    if (!(rf.e_max > 0.0) || !(rf.a > 0.0)) throw ConfigError("energy.rf: e_max and a must be positive");
    if (!(solar.s_sol >= 0.0)) throw ConfigError("energy.solar.s_sol must be non-negative");
    if (!(solar.sigma_sol >= 0.0 && solar.sigma_sol <= 1.0)) {
        throw ConfigError("energy.solar.sigma_sol must lie in [0, 1]");
    }
    if (!(slot_seconds > 0.0)) throw ConfigError("energy.slot_seconds must be positive");
    if (!(harvest_cap >= 0.0)) throw ConfigError("energy.harvest_cap must be non-negative");
    if (!(e_max > 0.0)) throw ConfigError("energy.e_max must be positive");
    if (!(initial_battery >= 0.0 && initial_battery <= e_max)) {
        throw ConfigError("energy.initial_battery must lie in [0, e_max]");
    }
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("energy.eta must lie in (0, 1]");
    if (!(ucs_initial >= 0.0 && ucs_initial <= 1.0)) throw ConfigError("ucs.initial must lie in [0, 1]");
    if (!(walk.max_step >= 0.0)) throw ConfigError("ucs.max_step must be non-negative");
    if (window == 0) throw ConfigError("ucs.window must be >= 1");
    if (!(reward_unit > 0.0)) throw ConfigError("reward must be positive");
}

std::vector<double> MdpState::features(double e_max) const {
    std::vector<double> f(u_hat);
    f.push_back(battery / e_max);
    return f;
}

RisControl decode_action(std::span<const double> raw, double max_amp) {
    if (raw.size() % 2 != 0) {
        throw ShapeError(fmt::format("decode_action: odd action length {}", raw.size()));
    }
    const std::size_t m = raw.size() / 2;
    RisControl c;
    c.amp.resize(m);
    c.phase.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        c.amp[i] = max_amp * std::clamp(raw[i], 0.0, 1.0);
        c.phase[i] = std::fmod(kTwoPi * std::clamp(raw[m + i], 0.0, 1.0), kTwoPi);
    }
    return c;
}

std::vector<double> encode_action(const RisControl& ctrl, double max_amp) {
    const std::size_t m = ctrl.elements();
    std::vector<double> raw(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        raw[i] = ctrl.amp[i] / max_amp;
        raw[m + i] = ctrl.phase[i] / kTwoPi;
    }
    return raw;
}

Adjustment adjust_action(const RisControl& proposed, const ChannelRealization& ch, const RisNoiseParams& noise,
                         double battery, double max_amp) {
    Adjustment out;
    out.control = proposed;
    double e_c = ris_consumption(ch, proposed, noise);
    if (e_c <= battery) {
        out.branch = AdjustBranch::keep;
    } else if (unit_amplitude_consumption(ch, noise) <= battery) {
        out.branch = AdjustBranch::scale;
        for (auto& a : out.control.amp) {
            a /= max_amp;
        }
        e_c = ris_consumption(ch, out.control, noise);
    } else {
        out.branch = AdjustBranch::off;
        out.control = RisControl::off(proposed.elements());
        e_c = 0.0;
    }
    if (e_c > battery) {
        out.clamped = true;
        if (battery <= 0.0) {
            std::fill(out.control.amp.begin(), out.control.amp.end(), 0.0);
        } else {
            const double s = std::sqrt(battery / e_c);
            for (auto& a : out.control.amp) {
                a *= s;
            }
        }
        e_c = ris_consumption(ch, out.control, noise);
        // Rounding can leave e^c a few ulps above the battery.
        while (e_c > battery) {
            for (auto& a : out.control.amp) {
                a *= 1.0 - 1e-12;
            }
            e_c = ris_consumption(ch, out.control, noise);
        }
    }
    out.consumption = e_c;
    return out;
}

Environment::Environment(EnvConfig cfg, ChannelModel model, std::shared_ptr<const PredictorBank> predictor)
    : cfg_(std::move(cfg)), model_(std::move(model)), predictor_(std::move(predictor)) {
    cfg_.validate(model_.users());
    if (predictor_ && predictor_->users() != model_.users()) {
        throw ConfigError(fmt::format("predictor covers {} users, cell has {}", predictor_->users(), model_.users()));
    }
    if (predictor_ && predictor_->config().window != cfg_.window) {
        throw ConfigError("predictor window differs from ucs.window");
    }
}

MdpState Environment::reset(std::uint64_t episode) {
    const CounterRng root = CounterRng(cfg_.seed, kEnvStream).split(episode);
    channel_rng_ = root.split(1);
    ucs_rng_ = root.split(2);
    solar_rng_ = root.split(3);
    state_rng_ = root.split(4);

    const std::size_t k_users = users();
    ucs_ = UcsState::initial(k_users, cfg_.ucs_initial);
    history_.assign(k_users, {});
    for (std::size_t k = 0; k < k_users; ++k) {
        history_[k].push_back(cfg_.ucs_initial);
    }
    // Warm the predictor windows with true slots before the first decision.
    for (std::size_t t = 1; t < cfg_.window; ++t) {
        ucs_ = walk_step(ucs_, ucs_rng_, cfg_.walk);
        for (std::size_t k = 0; k < k_users; ++k) {
            history_[k].push_back(ucs_.prob[k]);
        }
    }
    ucs_ = walk_step(ucs_, ucs_rng_, cfg_.walk);

    ch_ = sample_slot_channel(0);
    energy_ = EnergyState{};
    energy_.battery = cfg_.initial_battery;
    energy_.e_max_battery = cfg_.e_max;
    energy_.eta = cfg_.eta;
    slot_ = 0;
    ready_ = true;
    state_ = observe();
    return state_;
}

ChannelRealization Environment::sample_slot_channel(std::uint64_t slot) const {
    // One stream per slot: the direct taps of a slot do not depend on how
    // many surface taps earlier slots drew.
    CounterRng rng = channel_rng_.split(slot);
    return model_.sample(rng);
}

MdpState Environment::observe() {
    MdpState s;
    s.battery = energy_.battery;
    s.u_hat.resize(users());
    for (std::size_t k = 0; k < users(); ++k) {
        const auto& h = history_[k];
        if (h.size() != cfg_.window) {
            throw InvariantViolation("environment: predictor window out of sync");
        }
        const std::vector<double> window(h.begin(), h.end());
        // Without a trained model the last observed probability stands in.
        const double p = predictor_ ? predictor_->predict(k, window) : window.back();
        switch (cfg_.state_mode) {
            case StateMode::threshold: s.u_hat[k] = predict_state(p); break;
            case StateMode::bernoulli: s.u_hat[k] = state_rng_.bernoulli(p) ? 1.0 : 0.0; break;
            case StateMode::probability: s.u_hat[k] = p; break;
        }
    }
    return s;
}

RisControl Environment::shape_for_kind(const RisControl& proposed) const {
    switch (cfg_.ris) {
        case RisKind::active: return proposed;
        case RisKind::passive: {
            RisControl c = proposed;
            std::fill(c.amp.begin(), c.amp.end(), 1.0);
            return c;
        }
        case RisKind::none: return RisControl::off(proposed.elements());
    }
    return proposed;
}

StepOutcome Environment::step(std::span<const double> raw_action) {
    if (raw_action.size() != action_size()) {
        throw ShapeError(fmt::format("step: action of {} values, expected {}", raw_action.size(), action_size()));
    }
    return step_control(decode_action(raw_action, cfg_.max_amp));
}

StepOutcome Environment::step_control(const RisControl& proposed) {
    if (!ready_) {
        throw InvariantViolation("environment: step before reset");
    }
    if (proposed.elements() != elements() || proposed.phase.size() != elements()) {
        throw ShapeError(fmt::format("step: control for {} elements, surface has {}", proposed.elements(), elements()));
    }
    if (!proposed.valid(cfg_.max_amp)) {
        throw InvariantViolation("step: control outside [0, L] x [0, 2 pi)");
    }
    StepOutcome out;
    const Adjustment adj = adjust_action(shape_for_kind(proposed), ch_, cfg_.ris_noise, energy_.battery, cfg_.max_amp);
    out.branch = adj.branch;
    out.clamped = adj.clamped;
    out.executed = adj.control;
    out.executed_raw = encode_action(adj.control, cfg_.max_amp);

    const auto h = equivalent_channels(ch_, adj.control);
    const auto noise = ris_noise_powers(ch_, adj.control, cfg_.ris_noise);
    if (cfg_.access == AccessMode::noma) {
        const auto g = signal_strengths(ucs_, h, cfg_.noma);
        out.slot = sic_decode(g, h, ucs_, noise, cfg_.noma);
    } else {
        out.slot = oma_rates(ucs_, h, noise, cfg_.noma);
    }
    out.reward = cfg_.reward_unit * static_cast<double>(out.slot.successes);
    out.vacuous = out.slot.active == 0;
    out.ratio = success_ratio(out.slot);

    double radiated = 0.0;
    for (std::size_t k = 0; k < users(); ++k) {
        if (ucs_.active[k]) {
            radiated += cfg_.noma.p_tx[k];
        }
    }
    double bs_ris_gain = 0.0;
    for (const auto& x : ch_.h_bs_ris) {
        bs_ris_gain += std::norm(x);
    }
    SolarParams solar = cfg_.solar;
    if (cfg_.random_cloud) {
        solar.sigma_sol = solar_rng_.uniform();
    }
    const double hour = cfg_.start_hour + static_cast<double>(slot_) * cfg_.slot_seconds / 3600.0;
    const double power = harvest_rf(radiated * bs_ris_gain, cfg_.rf) + harvest_solar(hour, solar);
    out.harvest = std::min(power * cfg_.slot_seconds, cfg_.harvest_cap);
    energy_ = battery_step(energy_, out.harvest, adj.consumption);
    out.energy = energy_;

    for (std::size_t k = 0; k < users(); ++k) {
        history_[k].pop_front();
        history_[k].push_back(ucs_.prob[k]);
    }
    ucs_ = walk_step(ucs_, ucs_rng_, cfg_.walk);
    ++slot_;
    ch_ = sample_slot_channel(slot_);
    state_ = observe();
    out.next_state = state_;
    return out;
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) {
    out_ << "episode,step,branch,clamped,reward,active,successes,ratio,sum_rate,battery,harvest,consumption,overflow\n";
}

void TraceWriter::write(std::uint64_t episode, std::uint64_t step, const StepOutcome& o) {
    out_ << fmt::format("{},{},{},{},{:.1f},{},{},{:.6f},{:.9f},{:.12e},{:.12e},{:.12e},{:.12e}\n", episode, step,
                        static_cast<int>(o.branch), o.clamped ? 1 : 0, o.reward, o.slot.active, o.slot.successes,
                        o.ratio, o.slot.sum_rate(), o.energy.battery, o.energy.last_harvest, o.energy.last_consume,
                        o.energy.last_overflow);
}

}  // namespace risnoma
