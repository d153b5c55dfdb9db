// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/channel.hpp"
#include "isirx/maxstar.hpp"

#include <vector>

namespace isirx {

/// Channel trellis over BPSK inputs. A state encodes the L previous symbols;
/// bit l of the state is 1 when symbol x_{k-1-l} was -1.
struct Trellis {
    int memory = 0;
    int num_states = 1;
    VecXd taps;

    struct Transition {
        int next_state;
        double output;  // noiseless channel output for (state, input)
    };
    // transitions[state][b]: input symbol +1 for b = 0, -1 for b = 1
    std::vector<std::array<Transition, 2>> transitions;

    explicit Trellis(const ChannelModel& model)
        : memory(model.memory), num_states(1 << model.memory), taps(model.taps) {
        transitions.resize(num_states);
        for (int s = 0; s < num_states; ++s) {
            for (int b = 0; b < 2; ++b) {
                const double x0 = b == 0 ? 1.0 : -1.0;
                double out = taps[0] * x0;
                for (int l = 1; l <= memory; ++l)
                    out += taps[l] * (((s >> (l - 1)) & 1) ? -1.0 : 1.0);
                const int next = memory == 0 ? 0 : (((s << 1) | b) & (num_states - 1));
                transitions[s][b] = {next, out};
            }
        }
    }

    /// State holding "all previous symbols were +1" (frame boundaries).
    int boundary_state() const { return 0; }
};

struct BcjrResult {
    VecXd app;        // a posteriori LLRs, log P(x=+1|y)/P(x=-1|y), clipped
    VecXd extrinsic;  // app - apriori, clipped
};

/// Exact log-domain symbol MAP over the channel trellis. y covers N + L
/// observations; the first and last L inputs beyond the data block are the
/// known boundary symbols (+1). apriori holds per-symbol LLRs (empty = none).
/// exact = false switches max* to the hard-max approximation.
inline BcjrResult bcjr_equalize(const Trellis& trellis, const VecXd& y, double sigma2,
                                const VecXd& apriori = VecXd(), bool exact = true) {
    require(sigma2 > 0.0, "bcjr: noise variance must be positive");
    const int L = trellis.memory;
    const int n = static_cast<int>(y.size()) - L;
    require(n >= 1, "bcjr: observation vector shorter than memory");
    require(apriori.size() == 0 || apriori.size() == n, "bcjr: apriori length mismatch");
    const int steps = n + L;
    const int ns = trellis.num_states;
    const double neg_inf = -1e300;
    const double inv2s2 = 1.0 / (2.0 * sigma2);

    auto prior_llr = [&](int k) { return apriori.size() ? apriori[k] : 0.0; };
    // gamma(k, s, b) without allocation
    auto gamma = [&](int k, int s, int b) {
        const double out = trellis.transitions[s][b].output;
        const double d = y[k] - out;
        double g = -d * d * inv2s2;
        if (k < n) g += (b == 0 ? 0.5 : -0.5) * prior_llr(k);
        return g;
    };

    MatXd alpha = MatXd::Constant(steps + 1, ns, neg_inf);
    alpha(0, trellis.boundary_state()) = 0.0;
    for (int k = 0; k < steps; ++k) {
        const int b_max = k < n ? 1 : 0;  // boundary inputs are forced to +1
        for (int s = 0; s < ns; ++s) {
            const double a = alpha(k, s);
            if (a <= neg_inf) continue;
            for (int b = 0; b <= b_max; ++b) {
                const auto& tr = trellis.transitions[s][b];
                const double cand = a + gamma(k, s, b);
                double& slot = alpha(k + 1, tr.next_state);
                slot = slot <= neg_inf ? cand : maxstar(slot, cand, exact);
            }
        }
        alpha.row(k + 1).array() -= alpha.row(k + 1).maxCoeff();
    }

    MatXd beta = MatXd::Constant(steps + 1, ns, neg_inf);
    beta.row(steps).setZero();
    for (int k = steps - 1; k >= 0; --k) {
        const int b_max = k < n ? 1 : 0;
        for (int s = 0; s < ns; ++s) {
            double acc = neg_inf;
            for (int b = 0; b <= b_max; ++b) {
                const auto& tr = trellis.transitions[s][b];
                const double nb = beta(k + 1, tr.next_state);
                if (nb <= neg_inf) continue;
                const double cand = gamma(k, s, b) + nb;
                acc = acc <= neg_inf ? cand : maxstar(acc, cand, exact);
            }
            beta(k, s) = acc;
        }
        const double mx = beta.row(k).maxCoeff();
        if (mx > neg_inf) beta.row(k).array() -= mx;
    }

    BcjrResult res;
    res.app.resize(n);
    res.extrinsic.resize(n);
    for (int k = 0; k < n; ++k) {
        double num = neg_inf, den = neg_inf;
        for (int s = 0; s < ns; ++s) {
            const double a = alpha(k, s);
            if (a <= neg_inf) continue;
            for (int b = 0; b < 2; ++b) {
                const auto& tr = trellis.transitions[s][b];
                const double nb = beta(k + 1, tr.next_state);
                if (nb <= neg_inf) continue;
                const double metric = a + gamma(k, s, b) + nb;
                double& slot = b == 0 ? num : den;
                slot = slot <= neg_inf ? metric : maxstar(slot, metric, exact);
            }
        }
        const double app = num - den;
        res.app[k] = clip(app, -kLlrMax, kLlrMax);
        res.extrinsic[k] = clip(app - prior_llr(k), -kLlrMax, kLlrMax);
    }
    return res;
}

}  // namespace isirx
