#include "risnoma/ucs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma {

UcsState UcsState::initial(std::size_t k_users, double prob0) {
    return {std::vector<double>(k_users, prob0), std::vector<std::uint8_t>(k_users, 0)};
}

std::size_t UcsState::active_count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

UcsState walk_step(const UcsState& state, CounterRng& rng, const WalkParams& params) {
    UcsState next = state;
    for (std::size_t k = 0; k < state.users(); ++k) {
        const double step = rng.uniform(-params.max_step, params.max_step);
        next.prob[k] = std::clamp(state.prob[k] + step, 0.0, 1.0);
        next.active[k] = rng.bernoulli(next.prob[k]) ? 1 : 0;
    }
    return next;
}

std::vector<std::vector<double>> generate_series(std::size_t k_users, std::size_t length, double initial,
                                                 const CounterRng& rng, const WalkParams& params) {
    std::vector<std::vector<double>> out(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        auto user_rng = rng.split(k);
        auto& s = out[k];
        s.reserve(length);
        if (length == 0) {
            continue;
        }
        s.push_back(initial);
        for (std::size_t t = 1; t < length; ++t) {
            s.push_back(std::clamp(s.back() + user_rng.uniform(-params.max_step, params.max_step), 0.0, 1.0));
        }
    }
    return out;
}

std::pair<UcsDataset, UcsDataset> make_dataset(const std::vector<double>& series, std::size_t window, double split) {
    if (window == 0) {
        throw ConfigError("make_dataset: window must be positive");
    }
    if (series.size() <= window) {
        throw ConfigError(fmt::format("make_dataset: series of length {} is too short for window {}", series.size(),
                                      window));
    }
    if (!(split >= 0.0 && split <= 1.0)) {
        throw ConfigError("make_dataset: split must lie in [0, 1]");
    }
    const std::size_t n = series.size() - window;
    const auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
    UcsDataset train{window, {}, {}};
    UcsDataset test{window, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? train : test;
        dst.windows.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(i),
                                 series.begin() + static_cast<std::ptrdiff_t>(i + window));
        dst.labels.push_back(series[i + window]);
    }
    if (test.empty()) {
        fmt::print(stderr, "warning: make_dataset: split {} leaves no test windows\n", split);
    }
    return {std::move(train), std::move(test)};
}

void write_series_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& series) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << "slot";
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << ",user" << k;
    }
    out << '\n';
    const std::size_t length = series.empty() ? 0 : series.front().size();
    for (std::size_t t = 0; t < length; ++t) {
        out << t;
        for (const auto& s : series) {
            out << fmt::format(",{:.17g}", s[t]);
        }
        out << '\n';
    }
}

}  // namespace risnoma
