#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "risnoma/errors.hpp"
#include "risnoma/harness.hpp"

using namespace risnoma;

namespace {

ExperimentConfig tiny() {
    auto cfg = default_config();
    cfg.use_predictor = false;
    cfg.ris_elements = 4;
    cfg.geometry.ris = {30, 30, 5};
    cfg.env.noma.p_tx.assign(4, 0.01);
    cfg.ddpg.hidden = {16, 16};
    cfg.ddpg.memory = 30;
    cfg.ddpg.batch = 8;
    cfg.episodes = 3;
    cfg.steps = 10;
    cfg.eval_episodes = 2;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("variant names") {
    CHECK(parse_variant("active-ddpg").ris == RisKind::active);
    CHECK(parse_variant("passive-random").policy == PolicyKind::random);
    CHECK(parse_variant("none").ris == RisKind::none);
    CHECK(parse_variant("active-ac").name() == "active-ac");
    CHECK(parse_variant("none").name() == "none");
    CHECK_THROWS_AS(parse_variant("active"), ConfigError);
    CHECK_THROWS_AS(parse_variant("none-random"), ConfigError);
    CHECK_THROWS_AS(parse_variant("active-greedy"), ConfigError);
    const auto cfg = with_variant(default_config(), parse_variant("passive-ac"));
    CHECK(cfg.env.ris == RisKind::passive);
    CHECK_FALSE(cfg.ddpg.use_targets_and_replay);
    CHECK(variant_of(cfg).name() == "passive-ac");
}

TEST_CASE("random baseline draws uniform controls") {
    CounterRng rng(8);
    double sum = 0.0;
    double phase_sum = 0.0;
    std::size_t n = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto c = baseline_control(PolicyKind::random, rng, 16, 25.0);
        REQUIRE(c.valid(25.0));
        for (std::size_t m = 0; m < 16; ++m) {
            sum += c.amp[m];
            phase_sum += c.phase[m];
            ++n;
        }
    }
    CHECK(sum / static_cast<double>(n) == doctest::Approx(12.5).epsilon(0.02));
    CHECK(phase_sum / static_cast<double>(n) == doctest::Approx(std::numbers::pi).epsilon(0.02));
    const auto off = baseline_control(PolicyKind::off, rng, 3, 25.0);
    CHECK(off.amp == std::vector<double>(3, 0.0));
    CHECK_THROWS_AS(baseline_control(PolicyKind::ddpg, rng, 3, 25.0), ConfigError);
}

TEST_CASE("passive surface always reflects at unit gain when it can") {
    auto cfg = with_variant(tiny(), parse_variant("passive-random"));
    Environment env = make_environment(cfg);
    env.reset(0);
    CounterRng rng(1);
    for (int t = 0; t < 300; ++t) {
        const auto o = env.step_control(baseline_control(PolicyKind::random, rng, 4, 25.0));
        if (o.branch == AdjustBranch::keep) {
            for (double a : o.executed.amp) REQUIRE(a == 1.0);
        }
    }
}

TEST_CASE("fixed policies share the environment randomness") {
    const auto a = evaluate(with_variant(tiny(), parse_variant("none")), nullptr);
    const auto b = evaluate(with_variant(tiny(), parse_variant("active-off")), nullptr);
    REQUIRE(a.size() == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_reward == b[i].mean_reward);
        CHECK(a[i].vacuous == b[i].vacuous);
    }
    CHECK_THROWS_AS(evaluate(tiny(), nullptr), InvariantViolation);
}

TEST_CASE("experiments are byte-identical across runs") {
    for (const char* name : {"active-ddpg", "active-random", "none"}) {
        INFO(name);
        const auto cfg = with_variant(tiny(), parse_variant(name));
        const auto d1 = scratch("risnoma_h1");
        const auto d2 = scratch("risnoma_h2");
        run_experiment(cfg, {d1, true});
        run_experiment(cfg, {d2, false});
        CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
        CHECK(std::filesystem::exists(d1 / "trace.csv"));
        CHECK_FALSE(std::filesystem::exists(d2 / "trace.csv"));
        const auto lines = slurp(d1 / "metrics.csv");
        CHECK(std::count(lines.begin(), lines.end(), '\n') == 1 + 3 + 2);
        CHECK(slurp(d1 / "summary.json").find("\"variant\"") != std::string::npos);
        std::filesystem::remove_all(d1);
        std::filesystem::remove_all(d2);
    }
}

TEST_CASE("cached and checkpointed agents reproduce the evaluation") {
    const auto cfg = tiny();
    const auto cache = scratch("risnoma_cache");
    const auto ckpt = cache / "saved.json";
    const auto fresh = run_experiment(cfg, {.cache_dir = cache, .save_checkpoint = ckpt});
    const auto cached = run_experiment(cfg, {.cache_dir = cache});
    const auto loaded = run_experiment(cfg, {.load_checkpoint = ckpt});
    for (std::size_t i = 0; i < fresh.eval.size(); ++i) {
        CHECK(fresh.eval[i].mean_reward == cached.eval[i].mean_reward);
        CHECK(fresh.eval[i].mean_reward == loaded.eval[i].mean_reward);
    }
    CHECK(cached.train.size() == fresh.train.size());
    CHECK(cached.first_update_step == fresh.first_update_step);
    std::filesystem::remove_all(cache);
}

TEST_CASE("sweep axes") {
    const auto base = tiny();
    CHECK(apply_axis(base, "K", 2).users() == 2);
    CHECK(apply_axis(base, "K", 6).env.noma.p_tx == std::vector<double>(6, 0.01));
    CHECK(apply_axis(base, "R0", 1.5).env.noma.r0 == 1.5);
    CHECK(apply_axis(base, "L", 5).env.max_amp == 5.0);
    CHECK(apply_axis(base, "M", 9).ris_elements == 9);
    CHECK_THROWS_AS(apply_axis(base, "M", 2.5), ConfigError);
    CHECK_THROWS_AS(apply_axis(base, "K", 0), ConfigError);
    CHECK_THROWS_AS(apply_axis(base, "Z", 1), ConfigError);
    auto listed = base;
    listed.geometry.users = {{100, 0, 0}, {0, 200, 0}, {300, 0, 0}};
    listed.env.noma.p_tx.assign(3, 0.01);
    CHECK(apply_axis(listed, "K", 2).geometry.users.size() == 2);
    CHECK_THROWS_AS(apply_axis(listed, "K", 4), ConfigError);
}

TEST_CASE("sweeps without retraining need every checkpoint") {
    const auto dir = scratch("risnoma_sweep");
    SweepOptions opt;
    opt.variants = {"active-ddpg"};
    opt.retrain = false;
    opt.checkpoint_dir = dir;
    const auto expected = sweep_checkpoint_path(dir, "active-ddpg", "L", 5, 1);
    CHECK(expected.filename() == "active-ddpg_L_5_seed1.json");
    try {
        run_sweep(tiny(), "L", {5}, opt);
        FAIL("missing checkpoint accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(expected.string()) != std::string::npos);
    }

    SweepOptions save;
    save.variants = {"active-ddpg", "passive-random"};
    save.checkpoint_dir = dir;
    const auto trained = run_sweep(tiny(), "L", {5}, save);
    CHECK(std::filesystem::exists(expected));
    const auto reloaded = run_sweep(tiny(), "L", {5}, opt);
    CHECK(reloaded[0].eval.mean_reward == trained[0].eval.mean_reward);
    std::ostringstream csv;
    write_sweep_csv(csv, trained);
    CHECK(csv.str().rfind("axis,value,variant,seed,mean_reward,mean_success_ratio,mean_sum_rate,mean_battery\n", 0) == 0);
    CHECK(trained.size() == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("averages and hashes") {
    std::vector<EpisodeMetrics> rows(4);
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].mean_reward = static_cast<double>(i);
        rows[i].mean_ratio = 0.25 * static_cast<double>(i);
    }
    CHECK(first_n(rows, 2).mean_reward == 0.5);
    CHECK(last_n(rows, 2).mean_reward == 2.5);
    CHECK(average(rows, 1, 2).mean_ratio == 0.375);
    CHECK(stable_hash("") == "cbf29ce484222325");
    CHECK(stable_hash("a") == "af63dc4c8601ec8c");
    CHECK_FALSE(build_version().empty());
}
