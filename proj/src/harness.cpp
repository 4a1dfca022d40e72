#include "risnoma/harness.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "risnoma/errors.hpp"

#ifndef RISNOMA_GIT_DESCRIBE
#define RISNOMA_GIT_DESCRIBE "unknown"
#endif

namespace risnoma {

using nlohmann::json;

namespace {
constexpr std::uint64_t kSeriesStream = 1;
constexpr std::uint64_t kPolicyStream = 0x504f4c49;
constexpr std::uint64_t kEvalStream = 0x4556414c;
}  // namespace

std::string Variant::name() const {
    if (ris == RisKind::none) {
        return "none";
    }
    return to_string(ris) + "-" + to_string(policy);
}

Variant parse_variant(const std::string& s) {
    if (s == "none") {
        return {RisKind::none, PolicyKind::off};
    }
    const auto dash = s.find('-');
    if (dash == std::string::npos) {
        throw ConfigError(fmt::format("variant '{}': expected <active|passive>-<ddpg|ac|random|off> or 'none'", s));
    }
    const RisKind ris = parse_ris_kind(s.substr(0, dash));
    if (ris == RisKind::none) {
        throw ConfigError(fmt::format("variant '{}': write 'none' for the surface-free baseline", s));
    }
    return {ris, parse_policy(s.substr(dash + 1))};
}

ExperimentConfig with_variant(ExperimentConfig cfg, const Variant& v) {
    cfg.env.ris = v.ris;
    cfg.policy = v.policy;
    cfg.ddpg.use_targets_and_replay = v.policy != PolicyKind::ac;
    return cfg;
}

Variant variant_of(const ExperimentConfig& cfg) {
    if (cfg.env.ris == RisKind::none) {
        return {RisKind::none, PolicyKind::off};
    }
    return {cfg.env.ris, cfg.policy};
}

RisControl baseline_control(PolicyKind kind, CounterRng& rng, std::size_t m, double max_amp) {
    if (kind == PolicyKind::off) {
        return RisControl::off(m);
    }
    if (kind != PolicyKind::random) {
        throw ConfigError(fmt::format("baseline_control: '{}' is not a fixed policy", to_string(kind)));
    }
    RisControl c;
    c.amp.resize(m);
    c.phase.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        c.amp[i] = rng.uniform(0.0, max_amp);
        c.phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return c;
}

std::string build_version() {
    return RISNOMA_GIT_DESCRIBE;
}

std::string stable_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

PredictorFit fit_predictor(const ExperimentConfig& cfg) {
    const std::size_t k_users = cfg.users();
    PredictorFit fit;
    fit.series = generate_series(k_users, cfg.predictor_data.series_length, cfg.env.ucs_initial,
                                 CounterRng(cfg.predictor_data.series_seed, kSeriesStream), cfg.env.walk);
    fit.bank = std::make_shared<PredictorBank>(k_users, cfg.predictor);
    for (std::size_t k = 0; k < k_users; ++k) {
        auto [train, test] = make_dataset(fit.series[k], cfg.env.window, cfg.predictor_data.split);
        fit.reports.push_back(fit.bank->train(k, train));
        auto pred = fit.bank->predict_all(k, test);
        fit.test_mse.push_back(mse(pred, test.labels));
        fit.persistence_mse.push_back(persistence_mse(test));
        fit.test_predictions.push_back(std::move(pred));
        fit.train.push_back(std::move(train));
        fit.test.push_back(std::move(test));
    }
    return fit;
}

namespace {

std::string predictor_key(const ExperimentConfig& cfg) {
    json j = json::parse(config_to_json(cfg));
    json key;
    key["predictor"] = j["predictor"];
    key["ucs"] = j["ucs"];
    key["users"] = cfg.users();
    return stable_hash(key.dump());
}

}  // namespace

std::shared_ptr<const PredictorBank> shared_predictor(const ExperimentConfig& cfg,
                                                      const std::filesystem::path& cache_dir) {
    static std::map<std::string, std::shared_ptr<const PredictorBank>> memo;
    const std::string key = predictor_key(cfg);
    if (const auto it = memo.find(key); it != memo.end()) {
        return it->second;
    }
    std::shared_ptr<PredictorBank> bank;
    const auto file = cache_dir.empty() ? std::filesystem::path{} : cache_dir / ("predictor-" + key + ".json");
    if (!file.empty() && std::filesystem::exists(file)) {
        bank = std::make_shared<PredictorBank>(cfg.users(), cfg.predictor);
        bank->load(file);
    } else {
        bank = fit_predictor(cfg).bank;
        if (!file.empty()) {
            std::filesystem::create_directories(cache_dir);
            bank->save(file);
        }
    }
    memo.emplace(key, bank);
    return bank;
}

Environment make_environment(const ExperimentConfig& cfg, const std::filesystem::path& cache_dir) {
    std::shared_ptr<const PredictorBank> predictor;
    if (cfg.use_predictor && variant_of(cfg).learned()) {
        predictor = shared_predictor(cfg, cache_dir);
    }
    return Environment(cfg.env, ChannelModel(cfg.channel_config()), predictor);
}

EpisodeMetrics average(const std::vector<EpisodeMetrics>& rows, std::size_t first, std::size_t count) {
    EpisodeMetrics m;
    if (count == 0 || first + count > rows.size()) {
        throw InvariantViolation(fmt::format("average: range [{}, {}) outside {} rows", first, first + count, rows.size()));
    }
    m.episode = rows[first].episode;
    for (std::size_t i = first; i < first + count; ++i) {
        m.mean_reward += rows[i].mean_reward;
        m.mean_ratio += rows[i].mean_ratio;
        m.mean_sum_rate += rows[i].mean_sum_rate;
        m.mean_battery += rows[i].mean_battery;
        m.vacuous += rows[i].vacuous;
        m.steps += rows[i].steps;
    }
    const auto n = static_cast<double>(count);
    m.mean_reward /= n;
    m.mean_ratio /= n;
    m.mean_sum_rate /= n;
    m.mean_battery /= n;
    return m;
}

EpisodeMetrics first_n(const std::vector<EpisodeMetrics>& rows, std::size_t n) {
    return average(rows, 0, std::min(n, rows.size()));
}

EpisodeMetrics last_n(const std::vector<EpisodeMetrics>& rows, std::size_t n) {
    const std::size_t c = std::min(n, rows.size());
    return average(rows, rows.size() - c, c);
}

namespace {

json metrics_to_json(const std::vector<EpisodeMetrics>& rows) {
    json a = json::array();
    for (const auto& m : rows) {
        a.push_back({m.episode, m.mean_reward, m.mean_ratio, m.mean_sum_rate, m.mean_battery, m.vacuous, m.steps});
    }
    return a;
}

std::vector<EpisodeMetrics> metrics_from_json(const json& a) {
    std::vector<EpisodeMetrics> rows;
    for (const auto& r : a) {
        EpisodeMetrics m;
        m.episode = r.at(0).get<std::uint64_t>();
        m.mean_reward = r.at(1).get<double>();
        m.mean_ratio = r.at(2).get<double>();
        m.mean_sum_rate = r.at(3).get<double>();
        m.mean_battery = r.at(4).get<double>();
        m.vacuous = r.at(5).get<std::size_t>();
        m.steps = r.at(6).get<std::size_t>();
        rows.push_back(m);
    }
    return rows;
}

/// Rollouts of a fixed policy over `episodes` episodes starting at `first`.
std::vector<EpisodeMetrics> rollout_fixed(Environment& env, PolicyKind kind, std::uint64_t seed, std::uint64_t stream,
                                          std::uint64_t first, std::size_t episodes, std::size_t steps,
                                          const StepObserver& observer) {
    std::vector<EpisodeMetrics> out;
    const CounterRng root(seed, stream);
    for (std::size_t i = 0; i < episodes; ++i) {
        const std::uint64_t ep = first + i;
        CounterRng rng = root.split(ep);
        env.reset(ep);
        EpisodeAccumulator acc(ep);
        for (std::size_t k = 0; k < steps; ++k) {
            const auto o = env.step_control(baseline_control(kind, rng, env.elements(), env.config().max_amp));
            acc.add(o);
            if (observer) {
                observer(ep, k, o);
            }
        }
        out.push_back(acc.finish());
    }
    return out;
}

}  // namespace

std::vector<EpisodeMetrics> evaluate(const ExperimentConfig& cfg, const DdpgAgent* agent,
                                     const std::filesystem::path& cache_dir) {
    const Variant v = variant_of(cfg);
    if (v.learned()) {
        if (agent == nullptr) {
            throw InvariantViolation(fmt::format("evaluate: variant '{}' needs a trained agent", v.name()));
        }
        Environment env = make_environment(cfg, cache_dir);
        return run_greedy(env, *agent, cfg.eval_episodes, cfg.steps, cfg.eval_first_episode);
    }
    Environment env = make_environment(cfg, cache_dir);
    const PolicyKind kind = v.ris == RisKind::none ? PolicyKind::off : v.policy;
    return rollout_fixed(env, kind, cfg.seed, kEvalStream, cfg.eval_first_episode, cfg.eval_episodes, cfg.steps, {});
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    ExperimentResult r;
    r.variant = variant_of(cfg);

    std::ofstream trace_file;
    std::unique_ptr<TraceWriter> trace;
    if (opt.trace && !opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        trace_file.open(opt.out_dir / "trace.csv");
        trace = std::make_unique<TraceWriter>(trace_file);
    }
    const StepObserver observer = trace ? StepObserver([&trace](std::uint64_t ep, std::uint64_t k, const StepOutcome& o) {
        trace->write(ep, k, o);
    })
                                        : StepObserver{};

    if (r.variant.learned()) {
        Environment env = make_environment(cfg, opt.cache_dir);
        r.agent = std::make_shared<DdpgAgent>(env.state_size(), env.action_size(), cfg.ddpg);
        const std::string key = stable_hash(config_to_json(cfg));
        const auto ckpt = opt.cache_dir.empty() ? std::filesystem::path{} : opt.cache_dir / ("agent-" + key + ".json");
        const auto curve = opt.cache_dir.empty() ? std::filesystem::path{} : opt.cache_dir / ("curve-" + key + ".json");
        if (!opt.load_checkpoint.empty()) {
            r.agent->load(opt.load_checkpoint);
        } else if (!ckpt.empty() && !trace && std::filesystem::exists(ckpt) && std::filesystem::exists(curve)) {
            r.agent->load(ckpt);
            std::ifstream in(curve);
            const json j = json::parse(in);
            r.train = metrics_from_json(j.at("episodes"));
            r.first_update_step = j.at("first_update_step").get<std::uint64_t>();
        } else {
            auto t = run_training(env, *r.agent, cfg.episodes, cfg.steps, observer);
            r.train = std::move(t.episodes);
            r.first_update_step = t.first_update_step;
            if (!ckpt.empty()) {
                std::filesystem::create_directories(opt.cache_dir);
                r.agent->save(ckpt);
                std::ofstream out(curve);
                out << json{{"episodes", metrics_to_json(r.train)}, {"first_update_step", r.first_update_step}}.dump()
                    << '\n';
            }
        }
        if (!opt.save_checkpoint.empty()) {
            if (opt.save_checkpoint.has_parent_path()) {
                std::filesystem::create_directories(opt.save_checkpoint.parent_path());
            }
            r.agent->save(opt.save_checkpoint);
        }
        r.eval = evaluate(cfg, r.agent.get(), opt.cache_dir);
    } else {
        Environment env = make_environment(cfg, opt.cache_dir);
        const PolicyKind kind = r.variant.ris == RisKind::none ? PolicyKind::off : r.variant.policy;
        r.train = rollout_fixed(env, kind, cfg.seed, kPolicyStream, 0, cfg.episodes, cfg.steps, observer);
        r.eval = evaluate(cfg, nullptr, opt.cache_dir);
    }

    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        std::ofstream m(opt.out_dir / "metrics.csv");
        write_metrics_csv(m, r);
        std::ofstream s(opt.out_dir / "summary.json");
        s << summary_json(cfg, r) << '\n';
    }
    return r;
}

void write_metrics_csv(std::ostream& out, const ExperimentResult& r) {
    out << "phase,episode,mean_reward,mean_success_ratio,mean_sum_rate,mean_battery,vacuous_slots,steps\n";
    const auto rows = [&out](const char* phase, const std::vector<EpisodeMetrics>& ms) {
        for (const auto& m : ms) {
            out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.9f},{},{}\n", phase, m.episode, m.mean_reward,
                               m.mean_ratio, m.mean_sum_rate, m.mean_battery, m.vacuous, m.steps);
        }
    };
    rows("train", r.train);
    rows("eval", r.eval);
}

namespace {

json metrics_summary(const EpisodeMetrics& m) {
    return {{"mean_reward", m.mean_reward},
            {"mean_success_ratio", m.mean_ratio},
            {"mean_sum_rate", m.mean_sum_rate},
            {"mean_battery", m.mean_battery},
            {"vacuous_slots", m.vacuous},
            {"steps", m.steps}};
}

}  // namespace

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
    json j;
    j["name"] = cfg.name;
    j["variant"] = r.variant.name();
    j["seed"] = cfg.seed;
    j["version"] = build_version();
    if (!r.train.empty()) {
        j["train_first10"] = metrics_summary(first_n(r.train, 10));
        j["train_last10"] = metrics_summary(last_n(r.train, 10));
    }
    if (!r.eval.empty()) {
        j["eval"] = metrics_summary(average(r.eval, 0, r.eval.size()));
    }
    j["first_update_step"] = r.first_update_step;
    j["config"] = json::parse(config_to_json(cfg));
    return j.dump(2);
}

ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value) {
    const auto as_count = [&](const char* what) {
        if (!(value >= 1.0) || std::floor(value) != value) {
            throw ConfigError(fmt::format("sweep: {} must be a positive integer, got {}", what, value));
        }
        return static_cast<std::size_t>(value);
    };
    if (axis == "K") {
        const std::size_t k = as_count("K");
        if (!cfg.geometry.users.empty()) {
            if (k > cfg.geometry.users.size()) {
                throw ConfigError(fmt::format("sweep: K = {} exceeds the {} listed users", k, cfg.geometry.users.size()));
            }
            cfg.geometry.users.resize(k);
        }
        cfg.geometry.placement.count = k;
        const double p = cfg.env.noma.p_tx.front();
        cfg.env.noma.p_tx.assign(k, p);
    } else if (axis == "R0") {
        cfg.env.noma.r0 = value;
    } else if (axis == "L") {
        cfg.env.max_amp = value;
    } else if (axis == "M") {
        cfg.ris_elements = as_count("M");
    } else {
        throw ConfigError(fmt::format("sweep: unknown axis '{}' (K, R0, L, M)", axis));
    }
    cfg.validate();
    return cfg;
}

std::filesystem::path sweep_checkpoint_path(const std::filesystem::path& dir, const std::string& variant,
                                            const std::string& axis, double value, std::uint64_t seed) {
    return dir / fmt::format("{}_{}_{:g}_seed{}.json", variant, axis, value, seed);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                const std::vector<double>& values, const SweepOptions& opt) {
    std::vector<SweepRow> rows;
    std::map<std::string, std::shared_ptr<DdpgAgent>> base_agents;
    for (const double value : values) {
        const ExperimentConfig point = apply_axis(base, axis, value);
        for (const auto& name : opt.variants) {
            const Variant v = parse_variant(name);
            const ExperimentConfig cfg = with_variant(point, v);
            SweepRow row{axis, value, v.name(), cfg.seed, {}};
            std::vector<EpisodeMetrics> eval;
            if (!v.learned()) {
                eval = evaluate(cfg, nullptr, opt.cache_dir);
            } else if (!opt.retrain) {
                const auto path = sweep_checkpoint_path(opt.checkpoint_dir, v.name(), axis, value, cfg.seed);
                if (!std::filesystem::exists(path)) {
                    throw ConfigError(fmt::format("sweep: missing checkpoint '{}'", path.string()));
                }
                Environment env = make_environment(cfg, opt.cache_dir);
                DdpgAgent agent(env.state_size(), env.action_size(), cfg.ddpg);
                agent.load(path);
                eval = evaluate(cfg, &agent, opt.cache_dir);
            } else if (axis == "R0") {
                auto& agent = base_agents[v.name()];
                if (!agent) {
                    RunOptions ro;
                    ro.cache_dir = opt.cache_dir;
                    agent = run_experiment(with_variant(base, v), ro).agent;
                }
                eval = evaluate(cfg, agent.get(), opt.cache_dir);
            } else {
                RunOptions ro;
                ro.cache_dir = opt.cache_dir;
                if (!opt.checkpoint_dir.empty()) {
                    ro.save_checkpoint = sweep_checkpoint_path(opt.checkpoint_dir, v.name(), axis, value, cfg.seed);
                }
                eval = run_experiment(cfg, ro).eval;
            }
            row.eval = average(eval, 0, eval.size());
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "axis,value,variant,seed,mean_reward,mean_success_ratio,mean_sum_rate,mean_battery\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{:g},{},{},{:.6f},{:.6f},{:.6f},{:.9f}\n", r.axis, r.value, r.variant, r.seed,
                           r.eval.mean_reward, r.eval.mean_ratio, r.eval.mean_sum_rate, r.eval.mean_battery);
    }
}

}  // namespace risnoma
