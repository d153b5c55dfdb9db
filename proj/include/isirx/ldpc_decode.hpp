// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/code.hpp"
#include "isirx/maxstar.hpp"
#include "isirx/rad.hpp"

#include <vector>

namespace isirx {

/// boxplus through max*, so exact = false yields the min-sum rule
/// sign(a) sign(b) min(|a|, |b|).
template <class S>
S boxplus_t(const S& a, const S& b, bool exact) {
    return maxstar(S(0.0), a + b, exact) - maxstar(a, b, exact);
}

template <class S>
struct LdpcIterate {
    std::vector<S> llr;  // posterior LLRs, all code positions
    VecXi hard;
    bool syndrome_ok = false;
};

/// Flooding sum-product / min-sum decoding. channel_llr covers all code
/// positions (zeros where punctured). Early termination copies the converged
/// iterate forward so one entry per requested iteration is always returned.
template <class S>
std::vector<LdpcIterate<S>> ldpc_bp_decode_t(const LdpcCode& code,
                                             const std::vector<S>& channel_llr, int iters,
                                             bool sum_product = true, bool early_exit = true) {
    require(static_cast<int>(channel_llr.size()) == code.n_code(),
            "ldpc_bp_decode: LLR length mismatch");
    require(iters >= 1, "ldpc_bp_decode: iteration count must be >= 1");
    const int m = code.num_checks();
    const int n = code.n_code();

    // edge arrays, check-major
    std::vector<int> edge_col, row_begin(m + 1, 0);
    for (int r = 0; r < m; ++r) {
        row_begin[r + 1] = row_begin[r] + static_cast<int>(code.check_neighbors(r).size());
        for (int c : code.check_neighbors(r)) edge_col.push_back(c);
    }
    const int n_edges = static_cast<int>(edge_col.size());
    std::vector<std::vector<int>> col_edges(n);
    for (int e = 0; e < n_edges; ++e) col_edges[edge_col[e]].push_back(e);

    std::vector<S> v2c(n_edges), c2v(n_edges, S(0.0));
    for (int e = 0; e < n_edges; ++e) v2c[e] = channel_llr[edge_col[e]];

    std::vector<LdpcIterate<S>> out;
    out.reserve(iters);
    std::vector<S> fwd, bwd;
    for (int t = 0; t < iters; ++t) {
        // check-node update with forward/backward exclusion
        for (int r = 0; r < m; ++r) {
            const int b = row_begin[r], e = row_begin[r + 1];
            const int deg = e - b;
            if (deg == 1) {
                // a weight-1 check pins its bit to zero
                c2v[b] = S(kLlrMax);
                continue;
            }
            fwd.assign(deg, S(0.0));
            bwd.assign(deg, S(0.0));
            fwd[0] = v2c[b];
            bwd[deg - 1] = v2c[e - 1];
            for (int i = 1; i < deg; ++i) {
                fwd[i] = boxplus_t(fwd[i - 1], v2c[b + i], sum_product);
                bwd[deg - 1 - i] = boxplus_t(bwd[deg - i], v2c[e - 1 - i], sum_product);
            }
            c2v[b] = bwd[1];
            c2v[e - 1] = fwd[deg - 2];
            for (int i = 1; i < deg - 1; ++i)
                c2v[b + i] = boxplus_t(fwd[i - 1], bwd[i + 1], sum_product);
        }

        LdpcIterate<S> it;
        it.llr.resize(n);
        it.hard.resize(n);
        for (int v = 0; v < n; ++v) {
            S total = channel_llr[v];
            for (int e : col_edges[v]) total += c2v[e];
            it.llr[v] = clip(total, -kLlrMax, kLlrMax);
            it.hard[v] = value(it.llr[v]) < 0.0 ? 1 : 0;
            for (int e : col_edges[v]) v2c[e] = clip(total - c2v[e], -kLlrMax, kLlrMax);
        }
        it.syndrome_ok = code.syndrome(it.hard).isZero();
        const bool stop = early_exit && it.syndrome_ok;
        out.push_back(std::move(it));
        if (stop) {
            while (static_cast<int>(out.size()) < iters) out.push_back(out.back());
            break;
        }
    }
    return out;
}

struct LdpcDecodeIter {
    VecXd llr;
    VecXi hard;
    bool syndrome_ok = false;
};

inline std::vector<LdpcDecodeIter> ldpc_bp_decode(const LdpcCode& code, const VecXd& channel_llr,
                                                  int iters, bool sum_product = true,
                                                  bool early_exit = true) {
    std::vector<double> ch(channel_llr.data(), channel_llr.data() + channel_llr.size());
    auto raw = ldpc_bp_decode_t<double>(code, ch, iters, sum_product, early_exit);
    std::vector<LdpcDecodeIter> out;
    out.reserve(raw.size());
    for (auto& it : raw) {
        LdpcDecodeIter d;
        d.llr = Eigen::Map<const VecXd>(it.llr.data(), it.llr.size());
        d.hard = std::move(it.hard);
        d.syndrome_ok = it.syndrome_ok;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace isirx
