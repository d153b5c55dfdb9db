// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace isirx {

template <class Scalar>
using VecX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VecXd = VecX<double>;
using VecXi = VecX<int>;
using MatXd = MatX<double>;

/// Saturation bound for log-likelihood ratios. All message-passing updates
/// clip to this value so exp() paths stay finite.
inline constexpr double kLlrMax = 30.0;

inline double clip_llr(double x) {
    if (x > kLlrMax) return kLlrMax;
    if (x < -kLlrMax) return -kLlrMax;
    return x;
}

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace isirx
