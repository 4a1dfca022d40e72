#pragma once

#include <span>

namespace risnoma {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_greater = 1.0;  // one-sided, H1: mean(a) > mean(b)
    double p_two_sided = 1.0;
};

/// Welch's unequal-variance t test. Needs at least two values per sample.
/// Two constant samples give t = +/-inf (p = 0 or 1) when the means differ
/// and t = 0 (p = 0.5 one-sided) when they agree.
WelchResult welch_test(std::span<const double> a, std::span<const double> b);

}  // namespace risnoma
