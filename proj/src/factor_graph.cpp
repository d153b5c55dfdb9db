// SPDX-License-Identifier: Apache-2.0
#include "isirx/factor_graph.hpp"

#include <algorithm>
#include <set>

namespace isirx {

void FactorGraph::rebuild_adjacency() {
    vn_edges.assign(num_vn, {});
    fn_edges.assign(fns.size(), {});
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < num_edges(); ++e) {
        const auto& ed = edges[e];
        require(ed.vn >= 0 && ed.vn < num_vn, "edge references unknown VN");
        require(ed.fn >= 0 && ed.fn < num_fn(), "edge references unknown FN");
        require(seen.emplace(ed.fn, ed.vn).second, "duplicate (fn, vn) edge");
        vn_edges[ed.vn].push_back(e);
        fn_edges[ed.fn].push_back(e);
    }
    // Aggregations run in adjacency order; sorting by neighbor id makes them
    // independent of edge storage order.
    for (auto& lst : vn_edges)
        std::sort(lst.begin(), lst.end(), [&](int a, int b) { return edges[a].fn < edges[b].fn; });
    for (auto& lst : fn_edges)
        std::sort(lst.begin(), lst.end(), [&](int a, int b) { return edges[a].vn < edges[b].vn; });
    if (static_cast<int>(vn_tags.size()) != num_vn) vn_tags.assign(num_vn, VnTag{});
}

FactorGraph build_ffg(int n, int memory, bool keep_virtual) {
    require(n >= 1 && memory >= 0, "build_ffg: need N >= 1, L >= 0");
    const int L = memory;
    FactorGraph g;
    if (!keep_virtual) {
        g.num_vn = n;
        g.vn_tags.assign(n, VnTag{});
        for (int i = 0; i < n; ++i) g.vn_tags[i].symbol = i;
        for (int k = 0; k < n + L; ++k) {
            g.fns.push_back({FnKind::FfgObs, k, -1});
            const int lo = std::max(0, k - L);
            const int hi = std::min(n - 1, k);
            for (int v = lo; v <= hi; ++v) g.edges.push_back({k, v});
        }
    } else {
        g.num_vn = n + 2 * L;
        g.vn_tags.assign(g.num_vn, VnTag{});
        for (int j = 0; j < g.num_vn; ++j) {
            if (j < L || j >= L + n)
                g.vn_tags[j].virtual_boundary = true;
            else
                g.vn_tags[j].symbol = j - L;
        }
        for (int k = 0; k < n + L; ++k) {
            g.fns.push_back({FnKind::FfgObs, k, -1});
            for (int j = k; j <= k + L; ++j) g.edges.push_back({k, j});
        }
    }
    g.rebuild_adjacency();
    return g;
}

FactorGraph build_ufg(int n, int memory, bool keep_virtual) {
    require(n >= 1 && memory >= 0, "build_ufg: need N >= 1, L >= 0");
    const int L = memory;
    FactorGraph g;
    if (!keep_virtual) {
        g.num_vn = n;
        g.vn_tags.assign(n, VnTag{});
        for (int i = 0; i < n; ++i) g.vn_tags[i].symbol = i;
        for (int k = 0; k < n; ++k) g.fns.push_back({FnKind::UfgSelf, k, -1});
        for (int k = 0; k < n; ++k) {
            for (int d = 1; d <= L && k + d < n; ++d)
                g.fns.push_back({FnKind::UfgPair, k, k + d});
        }
        for (int f = 0; f < g.num_fn(); ++f) {
            const auto& fn = g.fns[f];
            g.edges.push_back({f, fn.a});
            if (fn.kind == FnKind::UfgPair) g.edges.push_back({f, fn.b});
        }
    } else {
        g.num_vn = n + 2 * L;
        g.vn_tags.assign(g.num_vn, VnTag{});
        for (int j = 0; j < g.num_vn; ++j) {
            if (j < L || j >= L + n)
                g.vn_tags[j].virtual_boundary = true;
            else
                g.vn_tags[j].symbol = j - L;
        }
        // One self factor and L pair factors per observation position.
        for (int k = 0; k < n + L; ++k) g.fns.push_back({FnKind::UfgSelf, k, -1});
        for (int k = 0; k < n + L; ++k) {
            for (int d = 1; d <= L; ++d) g.fns.push_back({FnKind::UfgPair, k, k + d});
        }
        for (int f = 0; f < g.num_fn(); ++f) {
            const auto& fn = g.fns[f];
            g.edges.push_back({f, fn.a});
            if (fn.kind == FnKind::UfgPair) g.edges.push_back({f, fn.b});
        }
    }
    g.rebuild_adjacency();
    return g;
}

FactorGraph replicate_graph(const FactorGraph& g, int copies) {
    require(copies >= 1, "replicate_graph: need at least one copy");
    // payload index strides per kind
    int obs_count = 0;
    for (const auto& fn : g.fns)
        if (fn.kind == FnKind::FfgObs) obs_count = std::max(obs_count, fn.a + 1);
    FactorGraph out;
    out.num_vn = g.num_vn * copies;
    out.vn_tags.resize(out.num_vn);
    out.fns.reserve(g.fns.size() * copies);
    out.edges.reserve(g.edges.size() * copies);
    for (int c = 0; c < copies; ++c) {
        const int vn_off = c * g.num_vn;
        const int fn_off = c * g.num_fn();
        for (int v = 0; v < g.num_vn; ++v) {
            VnTag tag = g.vn_tags[v];
            if (tag.symbol >= 0) tag.symbol += vn_off;
            out.vn_tags[vn_off + v] = tag;
        }
        for (const auto& fn : g.fns) {
            FnDescriptor d = fn;
            switch (fn.kind) {
                case FnKind::FfgObs:
                    d.a += c * obs_count;
                    break;
                case FnKind::UfgSelf:
                    d.a += vn_off;
                    break;
                case FnKind::UfgPair:
                    d.a += vn_off;
                    d.b += vn_off;
                    break;
                case FnKind::Check:
                    break;
            }
            out.fns.push_back(d);
        }
        for (const auto& e : g.edges) out.edges.push_back({e.fn + fn_off, e.vn + vn_off});
    }
    out.rebuild_adjacency();
    return out;
}

FactorGraph build_joint(const FactorGraph& eq_graph, const LdpcCode& code,
                        const Interleaver& pi) {
    require(code.n_transmitted() == eq_graph.num_vn,
            "build_joint: transmit-mask size must match equalizer VN count");
    require(pi.size() == eq_graph.num_vn, "build_joint: interleaver size mismatch");
    for (const auto& tag : eq_graph.vn_tags)
        require(!tag.virtual_boundary, "build_joint expects a pruned equalizer graph");

    FactorGraph g;
    g.num_vn = code.n_code();
    g.vn_tags.assign(g.num_vn, VnTag{});
    for (int c = 0; c < code.n_code(); ++c) g.vn_tags[c].punctured = !code.transmit_mask()[c];

    // Symbol k carries code bit transmitted_positions[pi.perm(k)].
    std::vector<int> symbol_to_code(eq_graph.num_vn);
    for (int k = 0; k < eq_graph.num_vn; ++k) {
        symbol_to_code[k] = code.transmitted_positions()[pi.perm(k)];
        g.vn_tags[symbol_to_code[k]].symbol = k;
    }

    g.fns = eq_graph.fns;
    for (const auto& ed : eq_graph.edges) g.edges.push_back({ed.fn, symbol_to_code[ed.vn]});
    for (int r = 0; r < code.num_checks(); ++r) {
        const int f = g.num_fn();
        g.fns.push_back({FnKind::Check, r, -1});
        for (int c : code.check_neighbors(r)) g.edges.push_back({f, c});
    }
    g.rebuild_adjacency();
    return g;
}

}  // namespace isirx
