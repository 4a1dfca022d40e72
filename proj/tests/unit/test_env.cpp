#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "risnoma/config.hpp"
#include "risnoma/errors.hpp"
#include "risnoma/harness.hpp"

using namespace risnoma;

namespace {

ExperimentConfig base_config() {
    auto cfg = default_config();
    cfg.use_predictor = false;
    cfg.geometry.ris = {30, 30, 5};
    cfg.env.noma.p_tx.assign(4, 0.01);
    return cfg;
}

ChannelRealization unit_channel() {
    ChannelRealization ch;
    ch.h_direct = {0.0};
    ch.h_bs_ris = {1.0};
    ch.h_ris_user = Eigen::MatrixXcd::Ones(1, 1);
    return ch;
}

}  // namespace

TEST_CASE("feasibility rule branches") {
    const auto ch = unit_channel();
    const RisNoiseParams quiet{0.0, 0.0};

    SUBCASE("affordable control is kept") {
        const RisControl c{{10.0}, {1.0}};
        const auto a = adjust_action(c, ch, quiet, 1e9, 25.0);
        CHECK(a.branch == AdjustBranch::keep);
        CHECK(a.control.amp == c.amp);
        CHECK(a.control.phase == c.phase);
        CHECK(a.consumption == 100.0);
        CHECK_FALSE(a.clamped);
    }
    SUBCASE("unaffordable control is scaled down by L") {
        const auto a = adjust_action(RisControl{{10.0}, {1.0}}, ch, quiet, 1.0, 25.0);
        CHECK(a.branch == AdjustBranch::scale);
        CHECK(a.control.amp[0] == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(a.consumption == doctest::Approx(0.16).epsilon(1e-15));
        CHECK(a.consumption <= 1.0);
        CHECK(a.control.phase[0] == 1.0);
    }
    SUBCASE("empty battery switches the surface off") {
        const auto a = adjust_action(RisControl{{10.0}, {1.0}}, ch, {0.5, 0.0}, 0.0, 25.0);
        CHECK(a.branch == AdjustBranch::off);
        CHECK(a.control.amp[0] == 0.0);
        CHECK(a.control.phase[0] == 0.0);
        CHECK(a.consumption == 0.0);
    }
    SUBCASE("scaled control that is still too expensive is clamped to the battery") {
        const auto a = adjust_action(RisControl{{25.0}, {0.0}}, ch, quiet, 1.0, 25.0);
        CHECK(a.branch == AdjustBranch::scale);
        CHECK(a.consumption <= 1.0);
        const auto b = adjust_action(RisControl{{25.0}, {0.0}}, ch, quiet, 1.0, 2.0);
        CHECK(b.branch == AdjustBranch::scale);
        CHECK(b.clamped);
        CHECK(b.consumption <= 1.0);
        CHECK(b.consumption == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("action coding") {
    const std::vector<double> raw{0.0, 0.5, 1.0, 0.25, 0.999, 1.0};
    const auto c = decode_action(raw, 25.0);
    CHECK(c.amp == std::vector<double>{0.0, 12.5, 25.0});
    CHECK(c.phase[0] == doctest::Approx(0.5 * std::numbers::pi));
    CHECK(c.phase[2] == 0.0);
    CHECK(c.valid(25.0));
    const auto back = encode_action(c, 25.0);
    CHECK(back[1] == 0.5);
    CHECK(back[3] == doctest::Approx(0.25));
    CHECK_THROWS_AS(decode_action(std::vector<double>{0.1, 0.2, 0.3}, 25.0), ShapeError);
}

TEST_CASE("reset gives the documented initial state") {
    const auto cfg = base_config();
    Environment env = make_environment(cfg);
    const auto s = env.reset(0);
    CHECK(env.state_size() == 5);
    CHECK(s.size() == 5);
    CHECK(s.battery == 0.6);
    CHECK(s.features(cfg.env.e_max).back() == 1.0);
    CHECK(env.action_size() == 32);
    Environment again = make_environment(cfg);
    const auto t = again.reset(0);
    CHECK(t.u_hat == s.u_hat);
    CHECK(env.ucs().prob == again.ucs().prob);
    CHECK(env.channel().h_direct == again.channel().h_direct);
    CHECK_THROWS_AS(make_environment(cfg).step_control(RisControl::off(16)), InvariantViolation);
}

TEST_CASE("rewards, vacuous slots and the direct-link cross-check") {
    auto cfg = base_config();
    Environment env = make_environment(cfg);
    env.reset(3);
    CounterRng rng(1);
    int vacuous = 0;
    int full = 0;
    for (int t = 0; t < 400; ++t) {
        const auto ucs = env.ucs();
        const auto ch = env.channel();
        const auto o = env.step_control(baseline_control(PolicyKind::off, rng, 16, 25.0));
        CHECK(o.reward == 10.0 * static_cast<double>(o.slot.successes));
        if (o.vacuous) {
            ++vacuous;
            CHECK(o.reward == 0.0);
            CHECK(o.ratio == 1.0);
        }
        if (o.slot.successes == 4) {
            ++full;
            CHECK(o.reward == 40.0);
        }
        // Switched-off surface: rates are the direct-link NOMA slot.
        const auto g = signal_strengths(ucs, ch.h_direct, cfg.env.noma);
        const std::vector<double> zero(4, 0.0);
        const auto direct = sic_decode(g, ch.h_direct, ucs, zero, cfg.env.noma);
        CHECK(o.slot.rates == direct.rates);
        CHECK(o.branch == AdjustBranch::keep);
    }
    CHECK(vacuous > 0);
    MESSAGE("slots with every user decoded: " << full);
}

TEST_CASE("surface kinds shape the executed control") {
    auto cfg = base_config();
    CounterRng rng(2);
    for (const auto kind : {RisKind::active, RisKind::passive, RisKind::none}) {
        cfg.env.ris = kind;
        Environment env = make_environment(cfg);
        env.reset(0);
        for (int t = 0; t < 50; ++t) {
            const auto o = env.step_control(baseline_control(PolicyKind::random, rng, 16, 25.0));
            for (double a : o.executed.amp) {
                if (kind == RisKind::passive && o.branch == AdjustBranch::keep) {
                    CHECK(a == 1.0);
                }
                if (kind == RisKind::none) {
                    CHECK(a == 0.0);
                }
            }
        }
    }
}

TEST_CASE("environment randomness does not depend on the policy") {
    const auto cfg = base_config();
    Environment a = make_environment(cfg);
    Environment b = make_environment(cfg);
    a.reset(7);
    b.reset(7);
    CounterRng rng(3);
    for (int t = 0; t < 100; ++t) {
        a.step_control(baseline_control(PolicyKind::random, rng, 16, 25.0));
        b.step_control(RisControl::off(16));
        REQUIRE(a.channel().h_bs_ris == b.channel().h_bs_ris);
        REQUIRE(a.ucs().active == b.ucs().active);
    }
}

TEST_CASE("battery stays in range and the ledger closes") {
    auto cfg = base_config();
    cfg.geometry.ris = {10, 10, 5};
    cfg.env.initial_battery = 0.05;
    Environment env = make_environment(cfg);
    env.reset(0);
    CounterRng rng(4);
    long double ledger = cfg.env.initial_battery;
    for (int t = 0; t < 2000; ++t) {
        const auto o = env.step_control(baseline_control(PolicyKind::random, rng, 16, 25.0));
        REQUIRE(o.energy.battery >= 0.0);
        REQUIRE(o.energy.battery <= cfg.env.e_max);
        ledger += cfg.env.eta * o.harvest - o.energy.last_consume - o.energy.last_overflow;
    }
    CHECK(std::abs(static_cast<double>(ledger) - env.energy().battery) < 1e-9);
}

TEST_CASE("trace writer") {
    const auto cfg = base_config();
    Environment env = make_environment(cfg);
    env.reset(0);
    std::ostringstream out;
    TraceWriter w(out);
    w.write(0, 0, env.step_control(RisControl::off(16)));
    const auto text = out.str();
    CHECK(text.rfind("episode,step,branch,clamped,reward,active,successes,ratio,sum_rate,battery,harvest,consumption,"
                     "overflow\n",
                     0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("environment config validation") {
    auto cfg = base_config();
    cfg.env.eta = 1.5;
    CHECK_THROWS_AS(make_environment(cfg), ConfigError);
    cfg = base_config();
    cfg.env.initial_battery = 1.0;
    CHECK_THROWS_AS(make_environment(cfg), ConfigError);
    CHECK(parse_ris_kind("passive") == RisKind::passive);
    CHECK(parse_access_mode("oma") == AccessMode::oma);
    CHECK_THROWS_AS(parse_ris_kind("mirror"), ConfigError);
}

TEST_CASE("direct links do not depend on the surface size") {
    auto small = base_config();
    small.ris_elements = 4;
    auto large = base_config();
    large.ris_elements = 36;
    Environment a = make_environment(small);
    Environment b = make_environment(large);
    a.reset(2);
    b.reset(2);
    for (int t = 0; t < 50; ++t) {
        REQUIRE(a.channel().h_direct == b.channel().h_direct);
        const auto oa = a.step_control(RisControl::off(4));
        const auto ob = b.step_control(RisControl::off(36));
        REQUIRE(oa.slot.rates == ob.slot.rates);
    }
}
