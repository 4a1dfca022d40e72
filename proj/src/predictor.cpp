#include "risnoma/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "risnoma/errors.hpp"
#include "risnoma/neural/checkpoint.hpp"
#include "risnoma/neural/dense.hpp"
#include "risnoma/neural/optim.hpp"

namespace risnoma {

StateMode parse_state_mode(const std::string& name) {
    if (name == "threshold") return StateMode::threshold;
    if (name == "bernoulli") return StateMode::bernoulli;
    if (name == "probability") return StateMode::probability;
    throw ConfigError(fmt::format("predictor.state_mode: unknown value '{}'", name));
}

std::string to_string(StateMode m) {
    switch (m) {
        case StateMode::threshold: return "threshold";
        case StateMode::bernoulli: return "bernoulli";
        case StateMode::probability: return "probability";
    }
    return "?";
}

void PredictorConfig::validate() const {
    if (window == 0) throw ConfigError("predictor.window must be >= 1");
    if (hidden == 0) throw ConfigError("predictor.hidden must be >= 1");
    if (layers == 0) throw ConfigError("predictor.layers must be >= 1");
    if (batch_size == 0) throw ConfigError("predictor.batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("predictor.lr must be positive");
    if (!(lr_final > 0.0) || lr_final > lr) throw ConfigError("predictor.lr_final must lie in (0, lr]");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("predictor.rho must lie in [0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("predictor.validation_fraction must lie in [0, 1)");
    }
}

PredictorBank::PredictorBank(std::size_t k_users, PredictorConfig cfg) : cfg_(cfg), trained_(k_users, 0) {
    cfg_.validate();
    const CounterRng root(cfg_.seed, 0x4c53544d);
    for (std::size_t k = 0; k < k_users; ++k) {
        models_.emplace_back(1, cfg_.hidden, cfg_.layers, cfg_.residual);
        CounterRng init = root.split(2 * k);
        models_.back().init(init);
    }
}

namespace {

// The networks work on 2p - 1 so inputs and targets are centred on zero.
double to_net(double p) {
    return 2.0 * p - 1.0;
}

double from_net(double y) {
    return 0.5 * (y + 1.0);
}

nn::Tensor2 gather_windows(const UcsDataset& data, std::span<const std::size_t> idx) {
    nn::Tensor2 x(idx.size(), data.window);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& w = data.windows[idx[r]];
        auto dst = x.row_span(r);
        for (std::size_t t = 0; t < w.size(); ++t) {
            dst[t] = to_net(w[t]);
        }
    }
    return x;
}

nn::Tensor2 gather_labels(const UcsDataset& data, std::span<const std::size_t> idx) {
    nn::Tensor2 y(idx.size(), 1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        y(r, 0) = to_net(data.labels[idx[r]]);
    }
    return y;
}

}  // namespace

TrainReport PredictorBank::train(std::size_t k, const UcsDataset& data) {
    if (data.empty()) {
        throw ConfigError(fmt::format("predictor: empty training set for user {}", k));
    }
    if (data.window != cfg_.window) {
        throw ConfigError(fmt::format("predictor: dataset window {} but model window {}", data.window, cfg_.window));
    }
    auto& net = models_.at(k);
    auto params = net.parameters();
    nn::RmsProp opt(params, {cfg_.lr, cfg_.rho, 1e-8});
    CounterRng shuffle = CounterRng(cfg_.seed, 0x4c53544d).split(2 * k + 1);

    const auto n_val = static_cast<std::size_t>(std::floor(cfg_.validation_fraction * static_cast<double>(data.size())));
    const std::size_t n_fit = data.size() - n_val;
    if (n_fit == 0) {
        throw ConfigError(fmt::format("predictor: no training windows left for user {} after the hold-out", k));
    }
    std::vector<std::size_t> val_idx(n_val);
    std::iota(val_idx.begin(), val_idx.end(), n_fit);
    const auto val_x = n_val > 0 ? nn::windows_to_sequence(gather_windows(data, val_idx)) : std::vector<nn::Tensor2>{};
    const auto val_y = n_val > 0 ? gather_labels(data, val_idx) : nn::Tensor2{};

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<nn::Tensor2> best;
    std::vector<std::size_t> order(n_fit);
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
        const double frac = cfg_.epochs > 1 ? static_cast<double>(e) / static_cast<double>(cfg_.epochs - 1) : 0.0;
        opt.set_lr(cfg_.lr * std::pow(cfg_.lr_final / cfg_.lr, frac));
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.below(i)]);
        }
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
            const std::size_t n = std::min(cfg_.batch_size, order.size() - start);
            const std::span<const std::size_t> idx(order.data() + start, n);
            const auto xs = nn::windows_to_sequence(gather_windows(data, idx));
            const auto y = gather_labels(data, idx);
            net.zero_grad();
            const auto pred = net.forward(xs);
            nn::Tensor2 grad;
            loss_sum += nn::mse_loss(pred, y, &grad) * static_cast<double>(n);
            net.backward(grad);
            opt.step();
        }
        // Reported in probability units: the 2p - 1 map scales squared errors by 4.
        report.epoch_loss.push_back(0.25 * loss_sum / static_cast<double>(order.size()));
        if (n_val > 0) {
            const double v = 0.25 * nn::mse_loss(net.infer(val_x), val_y);
            report.validation_loss.push_back(v);
            if (v < best_val) {
                best_val = v;
                report.best_epoch = e;
                best.clear();
                for (const auto& p : params) {
                    best.push_back(*p.value);
                }
            }
        } else {
            report.best_epoch = e;
        }
    }
    if (!best.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            *params[i].value = best[i];
        }
    }
    trained_.at(k) = 1;
    return report;
}

double PredictorBank::predict_raw(std::size_t k, std::span<const double> window) const {
    if (!trained_.at(k)) {
        throw InvariantViolation(fmt::format("predictor: user {} has not been trained", k));
    }
    if (window.size() != cfg_.window) {
        throw ShapeError(fmt::format("predictor: window of {} values, expected {}", window.size(), cfg_.window));
    }
    nn::Tensor2 x(1, window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        x(0, t) = to_net(window[t]);
    }
    return from_net(models_[k].infer(nn::windows_to_sequence(x))(0, 0));
}

double PredictorBank::predict(std::size_t k, std::span<const double> window) const {
    return clamp_probability(predict_raw(k, window));
}

std::vector<double> PredictorBank::predict_all(std::size_t k, const UcsDataset& data) const {
    if (!trained_.at(k)) {
        throw InvariantViolation(fmt::format("predictor: user {} has not been trained", k));
    }
    std::vector<double> out;
    if (data.empty()) {
        return out;
    }
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto y = models_[k].infer(nn::windows_to_sequence(gather_windows(data, idx)));
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(clamp_probability(from_net(y(i, 0))));
    }
    return out;
}

void PredictorBank::save(const std::filesystem::path& path) {
    nn::ParamList all;
    for (std::size_t k = 0; k < models_.size(); ++k) {
        for (auto p : models_[k].parameters()) {
            p.name = fmt::format("user{}.{}", k, p.name);
            all.push_back(p);
        }
    }
    nn::save_checkpoint(path, all,
                        fmt::format(R"({{"kind":"predictor","users":{},"window":{},"hidden":{},"layers":{}}})",
                                    models_.size(), cfg_.window, cfg_.hidden, cfg_.layers));
}

void PredictorBank::load(const std::filesystem::path& path) {
    nn::ParamList all;
    for (std::size_t k = 0; k < models_.size(); ++k) {
        for (auto p : models_[k].parameters()) {
            p.name = fmt::format("user{}.{}", k, p.name);
            all.push_back(p);
        }
    }
    nn::load_checkpoint(path, all);
    std::fill(trained_.begin(), trained_.end(), 1);
}

int predict_state(double p) {
    return p >= 0.5 ? 1 : 0;
}

double clamp_probability(double raw) {
    return std::clamp(raw, 0.0, 1.0);
}

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("mse: length mismatch");
    }
    if (a.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return s / static_cast<double>(a.size());
}

double persistence_mse(const UcsDataset& data) {
    std::vector<double> last;
    last.reserve(data.size());
    for (const auto& w : data.windows) {
        last.push_back(w.back());
    }
    return mse(last, data.labels);
}

void write_pred_vs_true_csv(const std::filesystem::path& path, const std::vector<UcsDataset>& tests,
                            const std::vector<std::vector<double>>& predictions) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    }
    out << "user,index,true,predicted,persistence\n";
    for (std::size_t k = 0; k < tests.size(); ++k) {
        for (std::size_t i = 0; i < tests[k].size(); ++i) {
            out << fmt::format("{},{},{:.9f},{:.9f},{:.9f}\n", k, i, tests[k].labels[i], predictions.at(k).at(i),
                               tests[k].windows[i].back());
        }
    }
}

}  // namespace risnoma
