#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "risnoma/active_ris.hpp"
#include "risnoma/energy.hpp"
#include "risnoma/geometry_channel.hpp"
#include "risnoma/noma.hpp"
#include "risnoma/predictor.hpp"
#include "risnoma/ucs.hpp"

namespace risnoma {

enum class RisKind { active, passive, none };
enum class AccessMode { noma, oma };

RisKind parse_ris_kind(const std::string& s);
AccessMode parse_access_mode(const std::string& s);
std::string to_string(RisKind k);
std::string to_string(AccessMode m);

struct EnvConfig {
    NomaParams noma;
    RisNoiseParams ris_noise{1e-14, 0.0};
    double max_amp = 25.0;  // L
    RisKind ris = RisKind::active;
    AccessMode access = AccessMode::noma;

    RfHarvestParams rf;
    SolarParams solar;
    bool random_cloud = true;     // sigma_sol ~ U[0, 1] per slot, else solar.sigma_sol
    double start_hour = 12.0;     // time of day of the first slot
    double slot_seconds = 1.0;
    double harvest_cap = 0.6;     // per-slot harvest ceiling (J)
    double e_max = 0.6;           // battery capacity (J)
    double initial_battery = 0.6;
    double eta = 0.9;

    double ucs_initial = 0.6;
    WalkParams walk;
    std::size_t window = 5;
    StateMode state_mode = StateMode::threshold;

    double reward_unit = 10.0;  // r
    std::uint64_t seed = 1;

    void validate(std::size_t k_users) const;
};

/// Observation: predicted indicators (or probabilities) and the battery.
struct MdpState {
    std::vector<double> u_hat;
    double battery = 0.0;

    /// [u_hat..., battery / e_max]: the agent's input vector.
    [[nodiscard]] std::vector<double> features(double e_max) const;
    [[nodiscard]] std::size_t size() const { return u_hat.size() + 1; }
};

/// Which rule of the feasibility adjustment produced the executed control.
enum class AdjustBranch : int { keep = 1, scale = 2, off = 3 };

struct Adjustment {
    RisControl control;
    AdjustBranch branch = AdjustBranch::keep;
    bool clamped = false;  // the final sqrt(E / e^c) clamp fired
    double consumption = 0.0;
};

/// The feasibility rule for a proposed control against the stored energy:
/// keep it if it is affordable; otherwise divide every amplification by L if
/// unit amplification is affordable; otherwise switch the surface off. A final
/// multiplicative clamp makes the consumption fit the battery exactly.
Adjustment adjust_action(const RisControl& proposed, const ChannelRealization& ch, const RisNoiseParams& noise,
                         double battery, double max_amp);

/// [0,1]^{2M} -> control: amp = L * raw[m], phase = 2 pi * raw[M + m] (mod 2 pi).
RisControl decode_action(std::span<const double> raw, double max_amp);
/// Inverse of decode_action on legal controls.
std::vector<double> encode_action(const RisControl& ctrl, double max_amp);

struct StepOutcome {
    MdpState next_state;
    double reward = 0.0;
    SlotRates slot;
    EnergyState energy;
    AdjustBranch branch = AdjustBranch::keep;
    bool clamped = false;
    RisControl executed;
    std::vector<double> executed_raw;  // executed control in [0,1]^{2M}
    double harvest = 0.0;              // e^h before eta
    bool vacuous = false;
    double ratio = 1.0;
};

/// One episode-resettable simulation of the cell.
///
/// Random streams are keyed by (seed, episode, purpose), so two environments
/// with the same seed see the same channels, activity and cloud cover in every
/// episode whatever the policy does.
class Environment {
public:
    Environment(EnvConfig cfg, ChannelModel model, std::shared_ptr<const PredictorBank> predictor = nullptr);

    MdpState reset(std::uint64_t episode);

    /// Executes a raw actor output in [0,1]^{2M}.
    StepOutcome step(std::span<const double> raw_action);
    /// Executes an already decoded control.
    StepOutcome step_control(const RisControl& proposed);

    [[nodiscard]] const EnvConfig& config() const { return cfg_; }
    [[nodiscard]] const ChannelModel& model() const { return model_; }
    [[nodiscard]] const ChannelRealization& channel() const { return ch_; }
    [[nodiscard]] const UcsState& ucs() const { return ucs_; }
    [[nodiscard]] const EnergyState& energy() const { return energy_; }
    [[nodiscard]] const MdpState& state() const { return state_; }
    /// Probabilities of the slots before the current one, oldest first.
    [[nodiscard]] const std::deque<double>& history(std::size_t k) const { return history_.at(k); }
    [[nodiscard]] std::size_t users() const { return model_.users(); }
    [[nodiscard]] std::size_t elements() const { return model_.elements(); }
    [[nodiscard]] std::size_t action_size() const { return 2 * elements(); }
    [[nodiscard]] std::size_t state_size() const { return users() + 1; }
    [[nodiscard]] std::uint64_t slot() const { return slot_; }

private:
    MdpState observe();
    [[nodiscard]] ChannelRealization sample_slot_channel(std::uint64_t slot) const;
    RisControl shape_for_kind(const RisControl& proposed) const;

    EnvConfig cfg_;
    ChannelModel model_;
    std::shared_ptr<const PredictorBank> predictor_;

    CounterRng channel_rng_{0};
    CounterRng ucs_rng_{0};
    CounterRng solar_rng_{0};
    CounterRng state_rng_{0};

    ChannelRealization ch_;
    UcsState ucs_;
    EnergyState energy_;
    MdpState state_;
    std::vector<std::deque<double>> history_;
    std::uint64_t slot_ = 0;
    bool ready_ = false;
};

/// CSV trace of every step: written when --trace is given.
class TraceWriter {
public:
    explicit TraceWriter(std::ostream& out);
    void write(std::uint64_t episode, std::uint64_t step, const StepOutcome& o);

private:
    std::ostream& out_;
};

}  // namespace risnoma
