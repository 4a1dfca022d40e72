#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "risnoma/config.hpp"
#include "risnoma/energy.hpp"
#include "risnoma/errors.hpp"
#include "risnoma/harness.hpp"
#include "risnoma/noma.hpp"

namespace fs = std::filesystem;
using namespace risnoma;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool trace = false;
    std::string out;
    std::string cache;
    std::string variant;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "experiment config (JSON)");
    app->add_option("--seed", c.seed, "run seed (overrides the config)");
    app->add_flag("--trace", c.trace, "write trace.csv with every step");
    app->add_option("--out", c.out, "output directory (default: the config's output.dir)");
    app->add_option("--cache", c.cache, "directory for cached predictors and agents");
    app->add_option("--variant", c.variant, "override surface and policy, e.g. active-random or none");
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
    if (c.seed) {
        cfg = with_seed(cfg, *c.seed);
    }
    if (!c.variant.empty()) {
        cfg = with_variant(cfg, parse_variant(c.variant));
    }
    return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) {
    return c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out);
}

void print_summary(const char* what, const std::vector<EpisodeMetrics>& rows, std::size_t first, std::size_t count) {
    if (rows.empty()) {
        return;
    }
    count = std::min(count, rows.size() - std::min(first, rows.size()));
    const auto m = average(rows, first, count);
    fmt::print("{}: {} episodes, success ratio {:.4f}, sum rate {:.4f}, reward {:.4f}, battery {:.4g} J\n", what,
               count, m.mean_ratio, m.mean_sum_rate, m.mean_reward, m.mean_battery);
}

void print_summary(const char* what, const std::vector<EpisodeMetrics>& rows) {
    print_summary(what, rows, 0, rows.size());
}

int cmd_train(const Common& c, const std::string& save) {
    const auto cfg = load(c);
    RunOptions opt;
    opt.out_dir = out_dir(c, cfg);
    opt.trace = c.trace;
    opt.cache_dir = c.cache;
    opt.save_checkpoint = save.empty() && variant_of(cfg).learned() ? opt.out_dir / "agent.json" : fs::path(save);
    const auto r = run_experiment(cfg, opt);
    fmt::print("{} seed {}\n", r.variant.name(), cfg.seed);
    if (!r.train.empty()) {
        const std::size_t n = std::min<std::size_t>(10, r.train.size());
        print_summary("train first", r.train, 0, n);
        print_summary("train last", r.train, r.train.size() - n, n);
    }
    print_summary("eval", r.eval);
    fmt::print("wrote {}\n", (opt.out_dir / "metrics.csv").string());
    return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint) {
    const auto cfg = load(c);
    const Variant v = variant_of(cfg);
    ExperimentResult r;
    r.variant = v;
    if (v.learned()) {
        if (checkpoint.empty()) {
            throw ConfigError(fmt::format("eval: variant '{}' needs --checkpoint", v.name()));
        }
        if (!fs::exists(checkpoint)) {
            throw ConfigError(fmt::format("eval: checkpoint '{}' does not exist", checkpoint));
        }
        Environment env = make_environment(cfg, c.cache);
        auto agent = std::make_shared<DdpgAgent>(env.state_size(), env.action_size(), cfg.ddpg);
        agent->load(checkpoint);
        r.agent = agent;
        r.eval = evaluate(cfg, agent.get(), c.cache);
    } else {
        r.eval = evaluate(cfg, nullptr, c.cache);
    }
    const fs::path dir = out_dir(c, cfg);
    fs::create_directories(dir);
    std::ofstream m(dir / "metrics.csv");
    write_metrics_csv(m, r);
    std::ofstream s(dir / "summary.json");
    s << summary_json(cfg, r) << '\n';
    print_summary("eval", r.eval);
    return 0;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("--values: '{}' is not a number", item));
        }
    }
    return out;
}

int cmd_sweep(const Common& c, std::string axis, const std::string& values, const std::vector<std::string>& variants,
              const std::string& ckpt_dir, bool no_retrain) {
    const auto cfg = load(c);
    if (axis.empty()) {
        axis = cfg.sweep.axis;
    }
    if (axis.empty()) {
        throw ConfigError("sweep: no axis (set sweep.axis or pass --axis)");
    }
    const auto vals = values.empty() ? cfg.sweep.values : parse_values(values);
    if (vals.empty()) {
        throw ConfigError("sweep: no values (set sweep.values or pass --values)");
    }
    SweepOptions opt;
    if (!variants.empty()) {
        opt.variants = variants;
    }
    opt.retrain = cfg.sweep.retrain && !no_retrain;
    opt.checkpoint_dir = ckpt_dir;
    opt.cache_dir = c.cache;
    const auto rows = run_sweep(cfg, axis, vals, opt);
    const fs::path dir = out_dir(c, cfg);
    fs::create_directories(dir);
    std::ofstream out(dir / "sweep.csv");
    write_sweep_csv(out, rows);
    write_sweep_csv(std::cout, rows);
    return 0;
}

int cmd_predict(const Common& c) {
    const auto cfg = load(c);
    const auto fit = fit_predictor(cfg);
    const fs::path dir = out_dir(c, cfg);
    fs::create_directories(dir);
    write_series_csv(dir / "series.csv", fit.series);
    write_pred_vs_true_csv(dir / "pred_vs_true.csv", fit.test, fit.test_predictions);
    std::ofstream m(dir / "metrics.csv");
    m << "user,train_windows,test_windows,final_train_loss,test_mse,persistence_mse\n";
    nlohmann::json users = nlohmann::json::array();
    for (std::size_t k = 0; k < fit.test.size(); ++k) {
        const double loss = fit.reports[k].epoch_loss.empty() ? 0.0 : fit.reports[k].epoch_loss.back();
        m << fmt::format("{},{},{},{:.9f},{:.9f},{:.9f}\n", k, fit.train[k].size(), fit.test[k].size(), loss,
                         fit.test_mse[k], fit.persistence_mse[k]);
        fmt::print("user {}: test mse {:.6f}, persistence {:.6f}\n", k, fit.test_mse[k], fit.persistence_mse[k]);
        users.push_back({{"user", k}, {"test_mse", fit.test_mse[k]}, {"persistence_mse", fit.persistence_mse[k]}});
    }
    nlohmann::json s;
    s["name"] = cfg.name;
    s["version"] = build_version();
    s["users"] = users;
    s["config"] = nlohmann::json::parse(config_to_json(cfg));
    std::ofstream(dir / "summary.json") << s.dump(2) << '\n';
    return 0;
}

int cmd_selftest(const Common& c) {
    auto cfg = load(c);
    int failures = 0;
    const auto check = [&failures](bool ok, const std::string& what) {
        fmt::print("[{}] {}\n", ok ? "ok" : "FAIL", what);
        failures += ok ? 0 : 1;
    };
    check(harvest_rf(0.0, cfg.env.rf) == 0.0, "rf harvest is zero without input power");
    check(std::abs(harvest_rf(cfg.env.rf.b + 50.0 / cfg.env.rf.a, cfg.env.rf) - cfg.env.rf.e_max) < 1e-9,
          "rf harvest saturates");

    cfg.episodes = 2;
    cfg.steps = 50;
    cfg.eval_episodes = 1;
    cfg.use_predictor = false;
    for (const char* name : {"none", "passive-random", "active-random"}) {
        const auto run = with_variant(cfg, parse_variant(name));
        Environment env = make_environment(run);
        CounterRng rng(run.seed, 0x53454c46);
        bool safe = true;
        env.reset(0);
        for (std::size_t t = 0; t < run.steps; ++t) {
            const auto o = env.step_control(baseline_control(run.policy == PolicyKind::random ? PolicyKind::random
                                                                                              : PolicyKind::off,
                                                             rng, env.elements(), run.env.max_amp));
            safe = safe && o.energy.battery >= 0.0 && o.energy.battery <= run.env.e_max && o.ratio >= 0.0 &&
                   o.ratio <= 1.0;
        }
        check(safe, fmt::format("{}: battery and success ratio stay in range", name));
    }
    const auto a = run_experiment(with_variant(cfg, parse_variant("active-random")));
    const auto b = run_experiment(with_variant(cfg, parse_variant("active-random")));
    std::ostringstream sa, sb;
    write_metrics_csv(sa, a);
    write_metrics_csv(sb, b);
    check(sa.str() == sb.str(), "repeated run gives identical metrics");
    fmt::print("selftest: {} failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-RIS NOMA energy-harvesting simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", build_version());

    Common c;
    std::string save, checkpoint, axis, values, ckpt_dir;
    std::vector<std::string> variants;
    bool no_retrain = false;

    auto* train = app.add_subcommand("train", "train (or roll out) the configured policy and evaluate it");
    add_common(train, c);
    train->add_option("--save", save, "agent checkpoint path (default <out>/agent.json)");

    auto* eval = app.add_subcommand("eval", "evaluate a policy, loading learned agents from a checkpoint");
    add_common(eval, c);
    eval->add_option("--checkpoint", checkpoint, "agent checkpoint to evaluate");

    auto* sweep = app.add_subcommand("sweep", "evaluate several policies along one parameter axis");
    add_common(sweep, c);
    sweep->add_option("--axis", axis, "K, R0, L or M");
    sweep->add_option("--values", values, "comma separated axis values");
    sweep->add_option("--variants", variants, "e.g. active-ddpg passive-random none");
    sweep->add_option("--checkpoints", ckpt_dir, "per-point agent checkpoints (read, or written when training)");
    sweep->add_flag("--no-retrain", no_retrain, "load agents from --checkpoints instead of training");

    auto* predict = app.add_subcommand("predict-ucs", "fit the activity predictors and dump predictions");
    add_common(predict, c);

    auto* selftest = app.add_subcommand("selftest", "quick consistency checks");
    add_common(selftest, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*train) {
            return cmd_train(c, save);
        }
        if (*eval) {
            return cmd_eval(c, checkpoint);
        }
        if (*sweep) {
            return cmd_sweep(c, axis, values, variants, ckpt_dir, no_retrain);
        }
        if (*predict) {
            return cmd_predict(c);
        }
        if (*selftest) {
            return cmd_selftest(c);
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const InvariantViolation& e) {
        fmt::print(stderr, "invariant violation: {}\n", e.what());
        return 3;
    } catch (const ShapeError& e) {
        fmt::print(stderr, "invariant violation: {}\n", e.what());
        return 3;
    }
    return 0;
}
