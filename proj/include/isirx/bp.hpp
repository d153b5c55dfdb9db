// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/channel.hpp"
#include "isirx/factor_graph.hpp"
#include "isirx/maxstar.hpp"
#include "isirx/rad.hpp"

#include <vector>

namespace isirx {

/// Matched-filter observation model: G = Hr^T Hr and chi = Hr^T (y - b),
/// where Hr keeps the data columns of the Toeplitz operator and b is the
/// contribution of the known boundary symbols.
struct UngerboeckData {
    MatXd G;
    VecXd chi;
};

inline UngerboeckData ungerboeck_data(const ChannelModel& model, const VecXd& y, int n) {
    const int L = model.memory;
    require(y.size() == n + L, "ungerboeck_data: observation length mismatch");
    const MatXd H = toeplitz_operator(model, n);
    const MatXd Hr = H.middleCols(L, n);
    VecXd boundary = VecXd::Zero(n + L);
    for (int j = 0; j < L; ++j) boundary += H.col(j) * kBoundarySymbol;
    for (int j = n + L; j < n + 2 * L; ++j) boundary += H.col(j) * kBoundarySymbol;
    UngerboeckData ud;
    ud.G = Hr.transpose() * Hr;
    ud.chi = Hr.transpose() * (y - boundary);
    return ud;
}

/// Per-iteration weight grid for neural BP, indexed [iteration][edge id].
template <class S>
using EdgeWeights = std::vector<std::vector<S>>;

namespace detail {

template <class S>
S weighted(const EdgeWeights<S>* w, int iter, int edge, const S& msg) {
    return w ? (*w)[iter][edge] * msg : msg;
}

// Factor tables for the per-observation graph: each factor k covers the
// in-range window symbols; out-of-range (boundary) symbols fold into the
// residual observation.
struct FfgFactorTables {
    // per FN: channel metric -(r - sum taps*x)^2 / (2 sigma2) for every
    // window configuration, bit i of the config set <=> symbol i of the
    // window (adjacency order) equals -1
    std::vector<std::vector<double>> config_metric;
};

inline FfgFactorTables make_ffg_tables(const FactorGraph& g, const ChannelModel& model,
                                       const VecXd& y) {
    const int L = model.memory;
    const int n = g.num_vn;
    require(y.size() == n + L, "bp_equalize: observation length mismatch");
    FfgFactorTables t;
    t.config_metric.resize(g.num_fn());
    const double inv2s2 = 1.0 / (2.0 * model.noise_variance);
    for (int f = 0; f < g.num_fn(); ++f) {
        require(g.fns[f].kind == FnKind::FfgObs, "bp_equalize: graph is not an FFG");
        const int k = g.fns[f].a;
        // residual after removing known boundary contributions
        double resid = y[k];
        for (int l = 0; l <= L; ++l) {
            const int sym = k - l;
            if (sym < 0 || sym >= n) resid -= model.taps[l] * kBoundarySymbol;
        }
        const auto& es = g.fn_edges[f];
        const int deg = static_cast<int>(es.size());
        auto& metrics = t.config_metric[f];
        metrics.resize(static_cast<std::size_t>(1) << deg);
        for (std::size_t cfg = 0; cfg < metrics.size(); ++cfg) {
            double s = 0.0;
            for (int i = 0; i < deg; ++i) {
                const int sym = g.edges[es[i]].vn;
                const double x = (cfg >> i) & 1 ? -1.0 : 1.0;
                s += model.taps[k - sym] * x;
            }
            const double d = resid - s;
            metrics[cfg] = -d * d * inv2s2;
        }
    }
    return t;
}

}  // namespace detail

/// Belief propagation on either equalization graph, optionally with learned
/// multiplicative weights on the factor-to-variable messages (one weight per
/// edge per iteration; unit weights reproduce plain BP bit-exactly because
/// the operation order is shared).
///
/// Returns one APP LLR vector per iteration. Works for S = double and for
/// S = rad::Var (recording to the active tape), which is how the weights are
/// trained.
template <class S>
std::vector<std::vector<S>> bp_equalize_t(const FactorGraph& g, const ChannelModel& model,
                                          const VecXd& y, const std::vector<S>& apriori,
                                          int iters, double damping = 0.0,
                                          const EdgeWeights<S>* weights = nullptr,
                                          bool exact = true) {
    require(iters >= 1, "bp_equalize: iteration count must be >= 1");
    require(g.num_fn() > 0, "bp_equalize: empty graph");
    require(apriori.empty() || static_cast<int>(apriori.size()) == g.num_vn,
            "bp_equalize: apriori length mismatch");
    if (weights) {
        require(static_cast<int>(weights->size()) == iters, "weights: iteration dim mismatch");
        for (const auto& row : *weights)
            require(static_cast<int>(row.size()) == g.num_edges(), "weights: edge dim mismatch");
    }
    for (const auto& tag : g.vn_tags)
        require(!tag.virtual_boundary, "bp_equalize expects a pruned graph");

    const bool is_ffg = g.fns[0].kind == FnKind::FfgObs;
    detail::FfgFactorTables tables;
    UngerboeckData ud;
    const double sigma2 = model.noise_variance;
    if (is_ffg) {
        tables = detail::make_ffg_tables(g, model, y);
    } else {
        ud = ungerboeck_data(model, y, g.num_vn);
    }

    const int n_edges = g.num_edges();
    std::vector<S> msg_f2v(n_edges, S(0.0));
    std::vector<S> msg_v2f(n_edges, S(0.0));
    std::vector<S> vn_total(g.num_vn, S(0.0));
    auto prior = [&](int v) { return apriori.empty() ? S(0.0) : apriori[v]; };

    std::vector<std::vector<S>> per_iter;
    per_iter.reserve(iters);

    for (int t = 0; t < iters; ++t) {
        // variable-to-factor: total minus own incoming (weighted) message
        for (int v = 0; v < g.num_vn; ++v) {
            S total = prior(v);
            for (int e : g.vn_edges[v]) total += detail::weighted(weights, t, e, msg_f2v[e]);
            vn_total[v] = total;
        }
        for (int v = 0; v < g.num_vn; ++v) {
            for (int e : g.vn_edges[v])
                msg_v2f[e] = vn_total[v] - detail::weighted(weights, t, e, msg_f2v[e]);
        }

        // factor-to-variable
        for (int f = 0; f < g.num_fn(); ++f) {
            const auto& es = g.fn_edges[f];
            const int deg = static_cast<int>(es.size());
            if (is_ffg) {
                const auto& metrics = tables.config_metric[f];
                // accumulate max* per (window position, symbol sign)
                std::vector<S> acc(2 * deg, S(0.0));
                std::vector<bool> seen(2 * deg, false);
                for (std::size_t cfg = 0; cfg < metrics.size(); ++cfg) {
                    S base = S(metrics[cfg]);
                    for (int i = 0; i < deg; ++i) {
                        const double sign = (cfg >> i) & 1 ? -0.5 : 0.5;
                        base += sign * msg_v2f[es[i]];
                    }
                    for (int i = 0; i < deg; ++i) {
                        const int slot = 2 * i + static_cast<int>((cfg >> i) & 1);
                        if (!seen[slot]) {
                            acc[slot] = base;
                            seen[slot] = true;
                        } else {
                            acc[slot] = maxstar(acc[slot], base, exact);
                        }
                    }
                }
                for (int i = 0; i < deg; ++i) {
                    S next = acc[2 * i] - acc[2 * i + 1] - msg_v2f[es[i]];
                    if (damping > 0.0) next = (1.0 - damping) * next + damping * msg_f2v[es[i]];
                    msg_f2v[es[i]] = next;
                }
            } else if (g.fns[f].kind == FnKind::UfgSelf) {
                const int k = g.fns[f].a;
                S next = S(2.0 * ud.chi[k] / sigma2);
                if (damping > 0.0) next = (1.0 - damping) * next + damping * msg_f2v[es[0]];
                msg_f2v[es[0]] = next;
            } else {  // UfgPair, combined factor exp(-G_kj x_k x_j / sigma2)
                const double gkj = ud.G(g.fns[f].a, g.fns[f].b) / sigma2;
                for (int side = 0; side < 2; ++side) {
                    const int e_out = es[side];
                    const int e_in = es[1 - side];
                    const S& m_in = msg_v2f[e_in];
                    // marginalize the partner symbol for x_out = +1 and -1
                    const S num = maxstar(0.5 * m_in - gkj, -0.5 * m_in + gkj, exact);
                    const S den = maxstar(0.5 * m_in + gkj, -0.5 * m_in - gkj, exact);
                    S next = num - den;
                    if (damping > 0.0) next = (1.0 - damping) * next + damping * msg_f2v[e_out];
                    msg_f2v[e_out] = next;
                }
            }
        }

        // posterior readout
        std::vector<S> app(g.num_vn);
        for (int v = 0; v < g.num_vn; ++v) {
            S total = prior(v);
            for (int e : g.vn_edges[v]) total += detail::weighted(weights, t, e, msg_f2v[e]);
            app[v] = clip(total, -kLlrMax, kLlrMax);
        }
        per_iter.push_back(std::move(app));
    }
    return per_iter;
}

/// Plain BP equalizer; APP LLRs per iteration.
inline std::vector<VecXd> bp_equalize(const FactorGraph& g, const ChannelModel& model,
                                      const VecXd& y, const VecXd& apriori, int iters,
                                      double damping = 0.0, bool exact = true) {
    std::vector<double> ap(apriori.data(), apriori.data() + apriori.size());
    auto out = bp_equalize_t<double>(g, model, y, ap, iters, damping, nullptr, exact);
    std::vector<VecXd> res;
    res.reserve(out.size());
    for (auto& v : out) res.push_back(Eigen::Map<const VecXd>(v.data(), v.size()));
    return res;
}

/// BP with multiplicative factor-to-variable weights, shape (iters, edges).
inline std::vector<VecXd> nbp_equalize(const FactorGraph& g, const ChannelModel& model,
                                       const VecXd& y, const VecXd& apriori, int iters,
                                       const MatXd& weights, double damping = 0.0,
                                       bool exact = true) {
    require(weights.rows() == iters && weights.cols() == g.num_edges(),
            "nbp_equalize: weight shape must be (iters, edges)");
    EdgeWeights<double> w(iters, std::vector<double>(g.num_edges()));
    for (int t = 0; t < iters; ++t)
        for (int e = 0; e < g.num_edges(); ++e) w[t][e] = weights(t, e);
    std::vector<double> ap(apriori.data(), apriori.data() + apriori.size());
    auto out = bp_equalize_t<double>(g, model, y, ap, iters, damping, &w, exact);
    std::vector<VecXd> res;
    res.reserve(out.size());
    for (auto& v : out) res.push_back(Eigen::Map<const VecXd>(v.data(), v.size()));
    return res;
}

}  // namespace isirx
