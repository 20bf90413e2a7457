#pragma once

// Shared statistical helpers for the test suites. These stay independent of
// the library internals so they can serve as oracles.

#include <cmath>
#include <cstdint>

namespace testsupport {

inline double binom_sigma(double p, std::uint64_t n) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// |observed - expected| <= k * sigma(p_expected, n)
inline bool within_sigma(double observed, double expected, std::uint64_t n, double k) {
    return std::abs(observed - expected) <= k * binom_sigma(expected, n) + 1e-15;
}

// Two-sample chi-square statistic for binary outcomes (1 degree of freedom).
inline double chi2_two_sample(std::uint64_t a0, std::uint64_t a1, std::uint64_t b0,
                              std::uint64_t b1) {
    const double n = static_cast<double>(a0 + a1 + b0 + b1);
    const double ra = static_cast<double>(a0 + a1);
    const double rb = static_cast<double>(b0 + b1);
    const double c0 = static_cast<double>(a0 + b0);
    const double c1 = static_cast<double>(a1 + b1);
    if (ra == 0 || rb == 0 || c0 == 0 || c1 == 0) return 0.0;
    double chi2 = 0.0;
    const double e[4] = {ra * c0 / n, ra * c1 / n, rb * c0 / n, rb * c1 / n};
    const double o[4] = {static_cast<double>(a0), static_cast<double>(a1),
                         static_cast<double>(b0), static_cast<double>(b1)};
    for (int i = 0; i < 4; ++i) chi2 += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
    return chi2;
}

// chi-square quantile at p = 0.001 for 1 dof.
inline constexpr double kChi2Crit1DofP001 = 10.828;

} // namespace testsupport
