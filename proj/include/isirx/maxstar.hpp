// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace isirx {

/// Jacobian logarithm: max*(a, b) = log(e^a + e^b) = max(a,b) + log1p(e^-|a-b|).
inline double maxstar(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Hard-max approximation of max*.
inline double maxstar_approx(double a, double b) { return std::max(a, b); }

inline double maxstar(double a, double b, bool exact) {
    return exact ? maxstar(a, b) : maxstar_approx(a, b);
}

/// log sum exp of a list via pairwise max*.
template <class Iter>
double maxstar_fold(Iter first, Iter last, bool exact = true) {
    double acc = *first++;
    for (; first != last; ++first) acc = maxstar(acc, *first, exact);
    return acc;
}

inline double maxstar_fold(const std::vector<double>& v, bool exact = true) {
    return maxstar_fold(v.begin(), v.end(), exact);
}

/// Stable log(1 + e^x).
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Pairwise check-node combination of two LLRs ("boxplus"),
/// expressed through max* so it stays smooth:
/// boxplus(a, b) = max*(0, a + b) - max*(a, b).
inline double boxplus(double a, double b) { return maxstar(0.0, a + b) - maxstar(a, b); }

inline double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

inline double value(double x) { return x; }

}  // namespace isirx
