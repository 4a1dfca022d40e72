#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "risnoma/rng.hpp"

namespace risnoma {

/// User communication state: per-user probability of having traffic this slot
/// and the realised on/off indicator.
struct UcsState {
    std::vector<double> prob;
    std::vector<std::uint8_t> active;

    static UcsState initial(std::size_t k_users, double prob0);
    [[nodiscard]] std::size_t users() const { return prob.size(); }
    [[nodiscard]] std::size_t active_count() const;
};

/// Sliding windows over one user's probability series. windows[i] holds
/// series[i .. i + window - 1] and labels[i] is series[i + window].
struct UcsDataset {
    std::size_t window = 5;
    std::vector<std::vector<double>> windows;
    std::vector<double> labels;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] bool empty() const { return labels.empty(); }
};

struct WalkParams {
    double max_step = 0.1;  // per-slot increment ~ U[-max_step, max_step]
};

/// One slot of the clamped random walk, followed by fresh Bernoulli activity.
/// For each user in index order: one uniform for the step, one for activity.
UcsState walk_step(const UcsState& state, CounterRng& rng, const WalkParams& params = {});

/// Independent per-user walks of `length` slots starting at `initial`.
/// User k draws from rng.split(k), so adding users never changes the others.
std::vector<std::vector<double>> generate_series(std::size_t k_users, std::size_t length, double initial,
                                                 const CounterRng& rng, const WalkParams& params = {});

/// Chronological split of the windows of one series into train/test.
/// The first floor(split * n) windows train, the rest test. Throws ConfigError
/// when the series is not longer than the window. A split of 1.0 leaves an
/// empty test set; callers warn about it.
std::pair<UcsDataset, UcsDataset> make_dataset(const std::vector<double>& series, std::size_t window = 5,
                                               double split = 0.7);

/// One column per user, one row per slot, header "slot,user0,user1,...".
void write_series_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& series);

}  // namespace risnoma
