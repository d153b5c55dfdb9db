// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/common.hpp"
#include "isirx/maxstar.hpp"

#include <vector>

namespace isirx::nn {

/// Binary cross-entropy in bits from probabilities of bit = 1, clamped to
/// [1e-7, 1 - 1e-7]. Non-negative; zero when predictions match the labels.
inline double bce_bits(const VecXd& prob_one, const VecXi& bits) {
    require(prob_one.size() == bits.size(), "bce_bits: length mismatch");
    const double inv = 1.0 / (static_cast<double>(bits.size()) * std::log(2.0));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < bits.size(); ++i) {
        const double p = clip(prob_one[i], 1e-7, 1.0 - 1e-7);
        acc -= bits[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return acc * inv;
}

/// Same loss evaluated directly from LLRs (log P(0)/P(1)), numerically
/// stable at saturated values.
inline double bce_bits_from_llr(const VecXd& llr, const VecXi& bits, double alpha = 1.0) {
    require(llr.size() == bits.size(), "bce_bits_from_llr: length mismatch");
    const double inv = 1.0 / (static_cast<double>(bits.size()) * std::log(2.0));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < bits.size(); ++i) {
        const double s = bits[i] == 1 ? 1.0 : -1.0;
        acc += softplus(s * alpha * llr[i]);
    }
    return acc * inv;
}

/// Arithmetic mean of per-iteration losses.
inline double multi_loss(const std::vector<double>& per_iteration) {
    require(!per_iteration.empty(), "multi_loss: empty loss list");
    double acc = 0.0;
    for (double v : per_iteration) acc += v;
    return acc / static_cast<double>(per_iteration.size());
}

/// Bitwise mutual information estimate (bits/channel use) at a fixed LLR
/// damping factor.
inline double bmi_estimate(const VecXd& llr, const VecXi& bits, double alpha) {
    require(alpha > 0.0, "bmi: damping must be positive");
    return 1.0 - bce_bits_from_llr(llr, bits, alpha);
}

/// BMI with the damping factor optimized by golden-section search over
/// [1e-3, 10]; never returns less than the undamped estimate.
struct BmiResult {
    double bmi;
    double alpha;
};

inline BmiResult bmi_estimate_optimized(const VecXd& llr, const VecXi& bits) {
    const double gr = 0.6180339887498949;
    double lo = 1e-3, hi = 10.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = bmi_estimate(llr, bits, x1);
    double f2 = bmi_estimate(llr, bits, x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = bmi_estimate(llr, bits, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = bmi_estimate(llr, bits, x1);
        }
    }
    const double xb = f1 > f2 ? x1 : x2;
    const double fb = std::max(f1, f2);
    const double f_unit = bmi_estimate(llr, bits, 1.0);
    if (f_unit >= fb) return {f_unit, 1.0};
    return {fb, xb};
}

}  // namespace isirx::nn
