// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/maxstar.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace isirx::rad {

/// Reverse-mode tape over scalars. Every recorded operation has at most two
/// parents, so nodes are fixed-size POD and the backward sweep is a single
/// reverse pass over the arena.
class Tape {
  public:
    struct Node {
        double w0, w1;
        int p0, p1;
    };

    int add(double w0, int p0, double w1 = 0.0, int p1 = -1) {
        nodes_.push_back({w0, w1, p0, p1});
        return static_cast<int>(nodes_.size()) - 1;
    }

    int leaf() { return add(0.0, -1); }

    std::size_t size() const { return nodes_.size(); }
    void clear() {
        nodes_.clear();
        adj_.clear();
    }

    /// Seeds d(loss)/d(loss) = 1 and accumulates adjoints for every node.
    void backward(int loss_index) {
        if (loss_index < 0 || loss_index >= static_cast<int>(nodes_.size()))
            throw std::runtime_error("backward on a value that was not recorded");
        adj_.assign(nodes_.size(), 0.0);
        adj_[loss_index] = 1.0;
        for (int i = loss_index; i >= 0; --i) {
            const double a = adj_[i];
            if (a == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.p0 >= 0) adj_[n.p0] += n.w0 * a;
            if (n.p1 >= 0) adj_[n.p1] += n.w1 * a;
        }
    }

    double adjoint(int index) const { return index >= 0 ? adj_[index] : 0.0; }

  private:
    std::vector<Node> nodes_;
    std::vector<double> adj_;
};

Tape*& active_tape();

/// RAII scope that makes a tape current for Var arithmetic on this thread.
struct TapeScope {
    explicit TapeScope(Tape& t) : prev_(active_tape()) { active_tape() = &t; }
    ~TapeScope() { active_tape() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

  private:
    Tape* prev_;
};

/// Scalar with an optional tape node; index -1 means constant.
struct Var {
    double v = 0.0;
    int idx = -1;

    Var() = default;
    Var(double value) : v(value) {}  // NOLINT: constants convert implicitly
    Var(double value, int index) : v(value), idx(index) {}
};

inline Var leaf(double value) {
    Tape* t = active_tape();
    assert(t && "leaf() requires an active tape");
    return Var(value, t->leaf());
}

inline double value(const Var& x) { return x.v; }

namespace detail {
inline Var unary(double out, const Var& a, double wa) {
    if (a.idx < 0) return Var(out);
    return Var(out, active_tape()->add(wa, a.idx));
}
inline Var binary(double out, const Var& a, double wa, const Var& b, double wb) {
    if (a.idx < 0 && b.idx < 0) return Var(out);
    if (a.idx < 0) return Var(out, active_tape()->add(wb, b.idx));
    if (b.idx < 0) return Var(out, active_tape()->add(wa, a.idx));
    return Var(out, active_tape()->add(wa, a.idx, wb, b.idx));
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
    return detail::binary(a.v + b.v, a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
    return detail::binary(a.v - b.v, a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
    return detail::binary(a.v * b.v, a, b.v, b, a.v);
}
inline Var operator/(const Var& a, double c) { return detail::unary(a.v / c, a, 1.0 / c); }
inline Var operator-(const Var& a) { return detail::unary(-a.v, a, -1.0); }
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

/// Exact max* with the smooth derivative pair (sigma(a-b), sigma(b-a)).
inline Var maxstar(const Var& a, const Var& b) {
    const double out = isirx::maxstar(a.v, b.v);
    const double sa = logistic(a.v - b.v);
    return detail::binary(out, a, sa, b, 1.0 - sa);
}

/// Hard-max max* with subgradient routed to the larger argument.
inline Var maxstar_approx(const Var& a, const Var& b) {
    const bool first = a.v >= b.v;
    return detail::binary(std::max(a.v, b.v), a, first ? 1.0 : 0.0, b, first ? 0.0 : 1.0);
}

inline Var maxstar(const Var& a, const Var& b, bool exact) {
    return exact ? maxstar(a, b) : maxstar_approx(a, b);
}

/// Saturation with zero gradient outside the clip band.
inline Var clip(const Var& x, double lo, double hi) {
    if (x.v > hi) return detail::unary(hi, x, 0.0);
    if (x.v < lo) return detail::unary(lo, x, 0.0);
    return x;
}

inline Var boxplus(const Var& a, const Var& b) {
    return maxstar(Var(0.0), a + b) - maxstar(a, b);
}

}  // namespace isirx::rad
