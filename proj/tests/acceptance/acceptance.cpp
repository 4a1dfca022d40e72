#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gradcheck.hpp"
#include "risnoma/config.hpp"
#include "risnoma/energy.hpp"
#include "risnoma/harness.hpp"
#include "risnoma/neural/dense.hpp"
#include "risnoma/neural/lstm.hpp"
#include "risnoma/noma.hpp"
#include "risnoma/stats.hpp"
#include "sic_oracle.hpp"

namespace fs = std::filesystem;
using namespace risnoma;

namespace {

// Tolerances and sizes, fixed here so a run cannot be tuned from the outside.
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr int kGradConfigs = 100;
constexpr double kGradSeconds = 30.0;

constexpr int kSicInstances = 1000;
constexpr double kSicSeconds = 5.0;

constexpr int kEnergySteps = 10000;
constexpr double kLedgerTol = 1e-9;
constexpr double kEnergySeconds = 10.0;

constexpr int kHarvestGrid = 1000;
constexpr double kSaturationTol = 1e-9;

constexpr std::size_t kPredTrain = 696;
constexpr std::size_t kPredTest = 299;
constexpr double kPredMseMax = 0.01;
constexpr double kPredSeconds = 120.0;

constexpr int kSeeds = 5;
constexpr std::size_t kCurveWindow = 10;
constexpr double kLearningGain = 1.2;
constexpr double kLearningSeconds = 600.0;

constexpr double kWelchAlpha = 0.05;
constexpr double kRelativeGap = 0.10;
constexpr double kPassiveEquivalence = 0.02;

constexpr double kKTolerance = 0.01;
constexpr double kPassiveMTolerance = 0.02;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path configs;
    fs::path cache;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig desk(const Context& ctx) {
    return load_config(ctx.configs / "desk.json");
}

nn::Tensor2 random_tensor(std::size_t r, std::size_t c, CounterRng& rng, double scale = 1.0) {
    nn::Tensor2 t(r, c);
    for (auto& v : t.values()) {
        v = rng.uniform(-scale, scale);
    }
    return t;
}

// 1. Analytic gradients against central differences.
Verdict gradients(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(20240601);
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
    int dense = 0;
    int lstm = 0;
    const nn::Activation acts[] = {nn::Activation::identity, nn::Activation::relu, nn::Activation::sigmoid,
                                   nn::Activation::tanh};
    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        CounterRng local = rng.split(static_cast<std::uint64_t>(cfg));
        gradcheck::Report rep;
        std::string label;
        if (cfg % 2 == 0) {
            ++dense;
            std::vector<std::size_t> sizes{1 + local.below(5)};
            const std::size_t depth = 1 + local.below(3);
            for (std::size_t d = 0; d < depth; ++d) {
                sizes.push_back(1 + local.below(6));
            }
            const auto hidden = acts[local.below(4)];
            const auto output = acts[local.below(4)];
            nn::Mlp net(sizes, hidden, output);
            net.init(local);
            for (std::size_t i = 0; i < net.depth(); ++i) {
                for (auto& v : net.layer(i).bias().values()) {
                    v = local.uniform(-0.5, 0.5);
                }
            }
            const std::size_t batch = 1 + local.below(4);
            const auto x = random_tensor(batch, sizes.front(), local);
            const auto y = random_tensor(batch, sizes.back(), local);
            net.zero_grad();
            nn::Tensor2 g;
            nn::mse_loss(net.forward(x), y, &g);
            net.backward(g);
            rep = gradcheck::compare(net.parameters(), [&] { return nn::mse_loss(net.infer(x), y); }, kGradStep);
            label = fmt::format("dense {} sizes", sizes.size());
        } else {
            ++lstm;
            const std::size_t in = 1 + local.below(3);
            const std::size_t hidden = 1 + local.below(5);
            const bool residual = local.bernoulli(0.5);
            nn::LstmRegressor net(in, hidden, 2, residual);
            net.init(local);
            for (auto& v : net.head().values()) {
                v = local.uniform(-1.0, 1.0);
            }
            const std::size_t batch = 1 + local.below(4);
            const std::size_t steps = 2 + local.below(5);
            std::vector<nn::Tensor2> xs;
            for (std::size_t t = 0; t < steps; ++t) {
                xs.push_back(random_tensor(batch, in, local));
            }
            const auto y = random_tensor(batch, 1, local);
            net.zero_grad();
            nn::Tensor2 g;
            nn::mse_loss(net.forward(xs), y, &g);
            net.backward(g);
            rep = gradcheck::compare(net.parameters(), [&] { return nn::mse_loss(net.infer(xs), y); }, kGradStep);
            label = fmt::format("lstm in {} hidden {} steps {}", in, hidden, steps);
        }
        checked += rep.checked;
        if (rep.max_rel_err > worst) {
            worst = rep.max_rel_err;
            where = fmt::format("config {} ({}) {}", cfg, label, rep.worst);
        }
    }
    const double secs = seconds_since(t0);
    return {worst < kGradTol && secs < kGradSeconds,
            fmt::format("{} configs ({} dense, {} two-layer LSTM), {} parameters, max rel err {:.3e} (< {:g}), {:.1f} s "
                        "(< {:g} s); worst at {}",
                        kGradConfigs, dense, lstm, checked, worst, kGradTol, secs, kGradSeconds, where)};
}

// 2. SIC against the independent oracle.
Verdict sic(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(777);
    int mismatches = 0;
    int ties = 0;
    std::string first;
    for (int trial = 0; trial < kSicInstances; ++trial) {
        const std::size_t k = 1 + rng.below(3);
        NomaParams p;
        for (std::size_t i = 0; i < k; ++i) {
            p.p_tx.push_back(rng.uniform(0.01, 0.2));
        }
        p.xi = rng.uniform(0.0, 1.0);
        p.sigma_sq = rng.uniform(1e-15, 1e-13);
        p.r0 = rng.uniform(0.05, 3.0);
        UcsState u = UcsState::initial(k, 0.5);
        std::vector<cdouble> h;
        std::vector<double> rn;
        std::vector<int> act;
        for (std::size_t i = 0; i < k; ++i) {
            u.active[i] = rng.bernoulli(0.8) ? 1 : 0;
            act.push_back(u.active[i]);
            h.push_back(rng.uniform(1e-7, 3e-6) * rng.complex_normal());
            rn.push_back(rng.uniform(0.0, 2e-14));
        }
        if (k > 1 && rng.bernoulli(0.1)) {
            h[1] = h[0];
            p.p_tx[1] = p.p_tx[0];
            ++ties;
        }
        const auto s = sic_decode(signal_strengths(u, h, p), h, u, rn, p);
        const auto o = oracle::sequential_decode(h, p.p_tx, act, rn, p.xi, p.sigma_sq, p.r0);
        bool same = s.rates == o.rates && static_cast<int>(s.successes) == o.successes &&
                    static_cast<int>(s.active) == o.active;
        for (std::size_t i = 0; i < k; ++i) {
            same = same && static_cast<int>(s.decoded[i]) == o.decoded[i];
        }
        if (!same) {
            if (mismatches == 0) {
                first = fmt::format(" (first mismatch at instance {})", trial);
            }
            ++mismatches;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < kSicSeconds,
            fmt::format("{} instances with K <= 3 ({} with tied users), {} mismatches in rates, decode flags or counts{}, "
                        "{:.2f} s (< {:g} s)",
                        kSicInstances, ties, mismatches, first, secs, kSicSeconds)};
}

// 3. Battery bounds, ledger closure and branch coverage under stress.
Verdict energy(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(ctx.configs / "energy_stress.json");
    cfg = with_variant(cfg, parse_variant("active-random"));
    Environment env = make_environment(cfg);
    env.reset(0);
    CounterRng rng(cfg.seed, 0x53545245);
    long double ledger = cfg.env.initial_battery;
    double max_gap = 0.0;
    int out_of_range = 0;
    int clamped = 0;
    std::map<AdjustBranch, int> branches;
    for (int t = 0; t < kEnergySteps; ++t) {
        const auto o = env.step_control(baseline_control(PolicyKind::random, rng, env.elements(), cfg.env.max_amp));
        if (!(o.energy.battery >= 0.0 && o.energy.battery <= cfg.env.e_max)) {
            ++out_of_range;
        }
        ++branches[o.branch];
        clamped += o.clamped ? 1 : 0;
        ledger += static_cast<long double>(cfg.env.eta) * o.harvest - o.energy.last_consume - o.energy.last_overflow;
        max_gap = std::max(max_gap, std::abs(static_cast<double>(ledger) - o.energy.battery));
    }
    const double secs = seconds_since(t0);
    const bool all_branches = branches[AdjustBranch::keep] > 0 && branches[AdjustBranch::scale] > 0 &&
                              branches[AdjustBranch::off] > 0;
    return {out_of_range == 0 && max_gap < kLedgerTol && all_branches && secs < kEnergySeconds,
            fmt::format("{} random-active steps: {} outside [0, {} J], ledger gap {:.3e} J (< {:g}), branches "
                        "keep/scale/off = {}/{}/{} ({} clamped), {:.2f} s (< {:g} s)",
                        kEnergySteps, out_of_range, cfg.env.e_max, max_gap, kLedgerTol, branches[AdjustBranch::keep],
                        branches[AdjustBranch::scale], branches[AdjustBranch::off], clamped, secs, kEnergySeconds)};
}

// 4. Rectifier model anchors.
Verdict harvest(const Context& ctx) {
    const auto cfg = load_config(ctx.configs / "desk.json");
    const auto& rf = cfg.env.rf;
    const double at_zero = harvest_rf(0.0, rf);
    int decreases = 0;
    double prev = at_zero;
    const double top = rf.b + 50.0 / rf.a;
    for (int i = 1; i <= kHarvestGrid; ++i) {
        const double v = harvest_rf(top * static_cast<double>(i) / kHarvestGrid, rf);
        if (v < prev) {
            ++decreases;
        }
        prev = v;
    }
    const double sat_gap = std::abs(harvest_rf(top, rf) - rf.e_max);
    return {at_zero == 0.0 && decreases == 0 && sat_gap < kSaturationTol,
            fmt::format("harvest_rf(0) = {:g}, {} decreases on a {}-point grid up to {:.6g} W, |harvest_rf(b + 50/a) "
                        "- E_M| = {:.3e} (< {:g})",
                        at_zero, decreases, kHarvestGrid, top, sat_gap, kSaturationTol)};
}

// 5. Activity predictor against persistence.
Verdict prediction(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load_config(ctx.configs / "ucs_predictor.json");
    const auto fit = fit_predictor(cfg);
    const double secs = seconds_since(t0);
    bool pass = secs < kPredSeconds;
    std::string users;
    for (std::size_t k = 0; k < fit.test_mse.size(); ++k) {
        const bool ok = fit.train[k].size() == kPredTrain && fit.test[k].size() == kPredTest &&
                        fit.test_mse[k] < fit.persistence_mse[k] && fit.test_mse[k] < kPredMseMax;
        pass = pass && ok;
        users += fmt::format("; user {} {}/{} windows, mse {:.6f} vs persistence {:.6f}{}", k, fit.train[k].size(),
                             fit.test[k].size(), fit.test_mse[k], fit.persistence_mse[k], ok ? "" : " (miss)");
    }
    pass = pass && fit.test_mse.size() == 4;
    return {pass, fmt::format("{} users, {:.1f} s (< {:g} s){}", fit.test_mse.size(), secs, kPredSeconds, users)};
}

struct SeedRuns {
    std::vector<ExperimentResult> results;
};

ExperimentResult run_cached(const ExperimentConfig& cfg, const Context& ctx) {
    RunOptions opt;
    opt.cache_dir = ctx.cache;
    return run_experiment(cfg, opt);
}

// 6. Learning signal of active-RIS DDPG over 5 seeds.
Verdict learning(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto base = with_variant(desk(ctx), parse_variant("active-ddpg"));
    double first = 0.0;
    double last = 0.0;
    std::string per_seed;
    for (int s = 1; s <= kSeeds; ++s) {
        const auto r = run_cached(with_seed(base, static_cast<std::uint64_t>(s)), ctx);
        const double f = first_n(r.train, kCurveWindow).mean_ratio;
        const double l = last_n(r.train, kCurveWindow).mean_ratio;
        first += f / kSeeds;
        last += l / kSeeds;
        per_seed += fmt::format("{}seed {} {:.3f} -> {:.3f}", s == 1 ? "" : ", ", s, f, l);
    }
    const double secs = seconds_since(t0);
    const double gain = last / first;
    return {gain >= kLearningGain && secs < kLearningSeconds,
            fmt::format("{} episodes x {} steps, M = {}, K = {}: mean success ratio first {} episodes {:.4f}, last {} "
                        "{:.4f}, ratio {:.3f} (>= {:g}), {:.0f} s (< {:g} s) [{}]",
                        base.episodes, base.steps, base.ris_elements, base.users(), kCurveWindow, first, kCurveWindow,
                        last, gain, kLearningGain, secs, kLearningSeconds, per_seed)};
}

std::vector<double> eval_means(const std::vector<ExperimentResult>& runs, double EpisodeMetrics::*field) {
    std::vector<double> out;
    for (const auto& r : runs) {
        out.push_back(average(r.eval, 0, r.eval.size()).*field);
    }
    return out;
}

// 7. Policy ordering and the NOMA/OMA comparison.
Verdict ordering(const Context& ctx) {
    const auto base = desk(ctx);
    const std::vector<std::string> names{"active-ddpg", "active-random", "passive-ddpg", "passive-random", "none"};
    std::map<std::string, std::vector<ExperimentResult>> runs;
    std::vector<ExperimentResult> oma;
    for (const auto& name : names) {
        for (int s = 1; s <= kSeeds; ++s) {
            runs[name].push_back(run_cached(with_seed(with_variant(base, parse_variant(name)), s), ctx));
        }
    }
    for (int s = 1; s <= kSeeds; ++s) {
        auto cfg = with_seed(with_variant(base, parse_variant("active-ddpg")), s);
        cfg.env.access = AccessMode::oma;
        ExperimentResult r;
        r.eval = evaluate(cfg, runs["active-ddpg"][s - 1].agent.get(), ctx.cache);
        oma.push_back(std::move(r));
    }
    std::map<std::string, std::vector<double>> ratio;
    for (const auto& name : names) {
        ratio[name] = eval_means(runs[name], &EpisodeMetrics::mean_ratio);
    }
    bool pass = true;
    std::vector<std::string> parts;
    for (const auto& name : names) {
        parts.push_back(fmt::format("{} {:.4f}", name, mean(ratio[name])));
    }
    const auto greater = [&](const std::string& what, const std::vector<double>& a, const std::vector<double>& b,
                             double min_gap) {
        const auto w = welch_test(a, b);
        const double gap = (mean(a) - mean(b)) / mean(b);
        const bool ok = w.p_greater < kWelchAlpha && gap >= min_gap;
        pass = pass && ok;
        parts.push_back(fmt::format("{}: p = {:.2e}, gap {:+.1f}%{}", what, w.p_greater, 100.0 * gap, ok ? "" : " (miss)"));
    };
    greater("active-ddpg > active-random", ratio["active-ddpg"], ratio["active-random"], 0.0);
    greater("active-random > passive-ddpg", ratio["active-random"], ratio["passive-ddpg"], 0.0);
    {
        const double d = std::abs(mean(ratio["passive-ddpg"]) - mean(ratio["passive-random"]));
        const bool ok = d <= kPassiveEquivalence;
        pass = pass && ok;
        parts.push_back(fmt::format("passive-ddpg ~ passive-random: |diff| {:.4f} (<= {:g}){}", d, kPassiveEquivalence,
                                    ok ? "" : " (miss)"));
    }
    greater("passive-random > none", ratio["passive-random"], ratio["none"], 0.0);
    greater("active-ddpg vs passive-ddpg", ratio["active-ddpg"], ratio["passive-ddpg"], kRelativeGap);
    greater("NOMA vs OMA sum rate", eval_means(runs["active-ddpg"], &EpisodeMetrics::mean_sum_rate),
            eval_means(oma, &EpisodeMetrics::mean_sum_rate), kRelativeGap);
    std::string detail = fmt::format("{} seeds, eval success ratio", kSeeds);
    for (const auto& p : parts) {
        detail += "; " + p;
    }
    return {pass, detail};
}

bool non_increasing(const std::vector<SweepRow>& rows, const std::string& variant, double tol, std::string& out) {
    std::vector<double> ys;
    for (const auto& r : rows) {
        if (r.variant == variant) {
            ys.push_back(r.eval.mean_ratio);
        }
    }
    bool ok = true;
    for (std::size_t i = 1; i < ys.size(); ++i) {
        ok = ok && ys[i] <= ys[i - 1] + tol;
    }
    out += fmt::format("; {} [", variant);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        out += fmt::format("{}{:.4f}", i ? " " : "", ys[i]);
    }
    out += ok ? "]" : "] (miss)";
    return ok;
}

bool flat(const std::vector<SweepRow>& rows, const std::string& variant, double tol, std::string& out) {
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& r : rows) {
        if (r.variant == variant) {
            lo = std::min(lo, r.eval.mean_ratio);
            hi = std::max(hi, r.eval.mean_ratio);
        }
    }
    const bool ok = hi - lo <= tol;
    out += fmt::format("; {} spread {:.4f} (<= {:g}){}", variant, hi - lo, tol, ok ? "" : " (miss)");
    return ok;
}

// 8. Sweep directions.
Verdict sweeps(const Context& ctx) {
    const auto base = with_seed(desk(ctx), 1);
    SweepOptions opt;
    opt.cache_dir = ctx.cache;
    bool pass = true;
    std::string detail;

    opt.variants = {"active-ddpg", "active-random", "passive-random", "none"};
    const auto r0 = run_sweep(base, "R0", {0.3, 0.45, 0.6, 0.75, 0.9}, opt);
    detail += "R0 0.3..0.9 (exact)";
    for (const auto& v : opt.variants) {
        pass = non_increasing(r0, v, 0.0, detail) && pass;
    }

    opt.variants = {"active-ddpg"};
    const auto k = run_sweep(base, "K", {2, 4, 6, 8}, opt);
    detail += fmt::format(" | K 2,4,6,8 (tol {:g})", kKTolerance);
    pass = non_increasing(k, "active-ddpg", kKTolerance, detail) && pass;

    opt.variants = {"passive-random", "none"};
    const auto l = run_sweep(base, "L", {1, 5, 10, 25, 50}, opt);
    detail += " | L 1..50";
    pass = flat(l, "passive-random", 0.0, detail) && pass;
    pass = flat(l, "none", 0.0, detail) && pass;

    const auto m = run_sweep(base, "M", {4, 8, 16, 32, 64}, opt);
    detail += " | M 4..64";
    pass = flat(m, "passive-random", kPassiveMTolerance, detail) && pass;
    pass = flat(m, "none", 0.0, detail) && pass;
    return {pass, detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. Byte-identical metrics for repeated runs.
Verdict determinism(const Context& ctx) {
    const fs::path root = ctx.cache / "determinism";
    bool pass = true;
    std::string detail;
    for (const char* name : {"active-ddpg", "passive-random", "none"}) {
        const auto cfg = with_variant(desk(ctx), parse_variant(name));
        std::string bytes[2];
        for (int i = 0; i < 2; ++i) {
            RunOptions opt;
            opt.out_dir = root / fmt::format("{}-{}", name, i);
            fs::remove_all(opt.out_dir);
            run_experiment(cfg, opt);
            bytes[i] = slurp(opt.out_dir / "metrics.csv");
        }
        const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
        pass = pass && same;
        detail += fmt::format("{}{} {} bytes {}", detail.empty() ? "" : "; ", name, bytes[0].size(),
                              same ? "identical" : "DIFFER");
    }
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int only = 0;
    std::string cache = "acceptance-cache";
    std::string configs = std::string(RISNOMA_SOURCE_DIR) + "/configs";
    app.add_option("--criterion", only, "run a single criterion (1-9); default all")->check(CLI::Range(0, 9));
    app.add_option("--cache", cache, "directory for trained agents shared between criteria");
    app.add_option("--configs", configs, "directory holding the shipped configs");
    CLI11_PARSE(app, argc, argv);

    const Context ctx{configs, cache};
    const std::vector<std::function<Verdict(const Context&)>> checks{gradients, sic,      energy,   harvest,    prediction,
                                                                     learning,  ordering, sweeps,   determinism};
    bool all = true;
    for (int c = 1; c <= 9; ++c) {
        if (only != 0 && c != only) {
            continue;
        }
        Verdict v;
        try {
            v = checks[c - 1](ctx);
        } catch (const std::exception& e) {
            v = {false, fmt::format("error: {}", e.what())};
        }
        std::cout << fmt::format("criterion {} {}: {}", c, v.pass ? "PASS" : "FAIL", v.detail) << std::endl;
        all = all && v.pass;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
