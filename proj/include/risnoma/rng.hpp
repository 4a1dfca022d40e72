#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace risnoma {

/// Counter-based pseudo random generator.
///
/// Output number i of a generator is a pure function of (key, i), where the
/// key is derived from a seed and a stream id. Streams are cheap to derive, so
/// each consumer (channels, user activity, exploration noise, ...) owns its
/// own stream and adding draws in one place never shifts another. All
/// distributions are implemented here rather than through <random> so the
/// sequence is identical on every standard library.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller. Draws come in pairs; the second value
    /// of a pair is cached.
    double normal();

    /// Circularly-symmetric complex Gaussian with unit variance, CN(0, 1).
    std::complex<double> complex_normal();

    bool bernoulli(double p);

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// k distinct indices drawn uniformly from [0, n) (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    /// Independent generator keyed on this generator's key and `stream`.
    /// Does not advance this generator.
    [[nodiscard]] CounterRng split(std::uint64_t stream) const;

    [[nodiscard]] std::uint64_t counter() const { return counter_; }

private:
    struct RawKey {};
    CounterRng(RawKey, std::uint64_t key);

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finaliser; exposed for key derivation in tests.
std::uint64_t mix64(std::uint64_t z);

}  // namespace risnoma
