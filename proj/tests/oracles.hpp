// SPDX-License-Identifier: Apache-2.0
// Test-only reference implementations, independent of the library paths they
// check.
#pragma once

#include "isirx/common.hpp"

#include <cmath>
#include <vector>

namespace oracle {

using isirx::MatXd;
using isirx::VecXd;
using isirx::VecXi;

/// Direct convolution y_k = sum_l h_l x_{k-l} over an extended sequence
/// (x index j corresponds to symbol time j - L).
inline VecXd convolve(const VecXd& taps, const VecXd& x_ext) {
    const int L = static_cast<int>(taps.size()) - 1;
    const int n_obs = static_cast<int>(x_ext.size()) - L;
    VecXd y = VecXd::Zero(n_obs);
    for (int k = 0; k < n_obs; ++k)
        for (int l = 0; l <= L; ++l) y[k] += taps[l] * x_ext[k + L - l];
    return y;
}

/// Exhaustive symbol-wise MAP for BPSK over an ISI channel with known +1
/// boundary symbols: enumerates all 2^N sequences. apriori holds per-symbol
/// LLRs log P(+1)/P(-1).
inline VecXd exhaustive_map(const VecXd& taps, const VecXd& y, double sigma2, int n,
                            const VecXd& apriori) {
    const int L = static_cast<int>(taps.size()) - 1;
    VecXd num = VecXd::Constant(n, -1e300);
    VecXd den = VecXd::Constant(n, -1e300);
    auto logsum = [](double a, double b) {
        if (a < b) std::swap(a, b);
        return a + std::log1p(std::exp(b - a));
    };
    VecXd x_ext = VecXd::Ones(n + 2 * L);
    for (long long m = 0; m < (1LL << n); ++m) {
        double prior = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = (m >> i) & 1 ? -1.0 : 1.0;
            x_ext[L + i] = x;
            if (apriori.size()) prior += 0.5 * x * apriori[i];
        }
        const VecXd z = convolve(taps, x_ext);
        const double metric = -(y - z).squaredNorm() / (2.0 * sigma2) + prior;
        for (int i = 0; i < n; ++i) {
            if ((m >> i) & 1)
                den[i] = logsum(den[i], metric);
            else
                num[i] = logsum(num[i], metric);
        }
    }
    return num - den;
}

/// Dense GF(2) elimination; returns the rank.
inline int gf2_rank(std::vector<std::vector<int>> rows, int cols) {
    int r = 0;
    const int m = static_cast<int>(rows.size());
    std::vector<std::vector<int>> dense(m, std::vector<int>(cols, 0));
    for (int i = 0; i < m; ++i)
        for (int c : rows[i]) dense[i][c] ^= 1;
    for (int c = 0; c < cols && r < m; ++c) {
        int piv = -1;
        for (int i = r; i < m; ++i)
            if (dense[i][c]) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        std::swap(dense[r], dense[piv]);
        for (int i = 0; i < m; ++i)
            if (i != r && dense[i][c])
                for (int j = 0; j < cols; ++j) dense[i][j] ^= dense[r][j];
        ++r;
    }
    return r;
}

inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace oracle
