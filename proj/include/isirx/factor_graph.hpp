// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/code.hpp"
#include "isirx/common.hpp"

#include <cstddef>
#include <vector>

namespace isirx {

enum class FnKind { FfgObs, UfgSelf, UfgPair, Check };

/// Factor descriptor. Payload meaning by kind:
///   FfgObs:  a = observation index k (factor for y_k)
///   UfgSelf: a = symbol index k
///   UfgPair: a, b = the symbol pair (a < b)
///   Check:   a = parity-check row index
struct FnDescriptor {
    FnKind kind;
    int a = -1;
    int b = -1;
};

struct VnTag {
    int symbol = -1;        // transmitted symbol index, -1 if never transmitted
    bool punctured = false;
    bool virtual_boundary = false;
};

struct GraphEdge {
    int fn;
    int vn;
};

/// Typed bipartite factor graph. Edge ids are stable and FN-major so learned
/// per-edge weights and message buffers index deterministically. Adjacency
/// lists are kept sorted by neighbor id, which fixes the reduction order of
/// aggregations independently of edge storage order.
struct FactorGraph {
    int num_vn = 0;
    std::vector<FnDescriptor> fns;
    std::vector<GraphEdge> edges;
    std::vector<std::vector<int>> vn_edges;  // per VN: incident edge ids
    std::vector<std::vector<int>> fn_edges;  // per FN: incident edge ids
    std::vector<VnTag> vn_tags;

    int num_fn() const { return static_cast<int>(fns.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    std::size_t node_edge_total() const {
        return static_cast<std::size_t>(num_vn) + fns.size() + edges.size();
    }

    void rebuild_adjacency();
};

/// Factor graph of the per-observation factorization: one factor per y_k
/// covering the window of symbols it mixes.
///
/// With keep_virtual = false (the default used by all receivers) the 2L
/// boundary VNs are removed and windows are clipped to the N data symbols;
/// their known contribution moves into the factor payloads. With
/// keep_virtual = true the boundary VNs stay in the graph, which is the
/// convention under which the size formula N(L+3) + L(L+4) counts nodes and
/// edges.
FactorGraph build_ffg(int n, int memory, bool keep_virtual = false);

/// Factor graph of the matched-filter (Ungerboeck) factorization: per-symbol
/// self factors plus pairwise interference factors for 0 < |k-j| <= L.
/// Pair factors are stored once per unordered pair.
///
/// keep_virtual = true retains boundary VNs and enumerates one self factor
/// and L pair factors per observation position, the convention under which
/// the size formula N(3L+3) + L(3L+4) counts nodes and edges.
FactorGraph build_ufg(int n, int memory, bool keep_virtual = false);

/// Joint graph for equalization and decoding: VNs are all code bits, the
/// equalizer factors of eq_graph attach to transmitted bits through the
/// interleaver (symbol k carries code bit transmitted_positions[pi.perm(k)]),
/// and one check factor per parity-check row. Equalizer factors keep their
/// ids; check factors follow.
FactorGraph build_joint(const FactorGraph& eq_graph, const LdpcCode& code,
                        const Interleaver& pi);

/// Disjoint union of `copies` shifted copies of a graph. Message passing
/// treats components independently, so a replicated graph processes a whole
/// batch of equal-length frames in one pass; factor payload indices
/// (observation/symbol positions) shift per copy.
FactorGraph replicate_graph(const FactorGraph& g, int copies);

/// Published size accounting for the two equalization graphs
/// (node + edge totals of the keep_virtual construction).
inline std::size_t ffg_size_formula(int n, int memory) {
    return static_cast<std::size_t>(n) * (memory + 3) +
           static_cast<std::size_t>(memory) * (memory + 4);
}
inline std::size_t ufg_size_formula(int n, int memory) {
    return static_cast<std::size_t>(n) * (3 * memory + 3) +
           static_cast<std::size_t>(memory) * (3 * memory + 4);
}

}  // namespace isirx
