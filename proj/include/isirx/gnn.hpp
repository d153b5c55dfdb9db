// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/bp.hpp"
#include "isirx/channel.hpp"
#include "isirx/factor_graph.hpp"
#include "isirx/nn/mlp.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace isirx::gnn {

/// Message-passing schedule: (outer, [inner]). One inner entry means
/// flooding (both factor kinds update simultaneously every iteration); two
/// entries mean sequential blocks of equalizer-only then decoder-only
/// iterations per outer loop.
struct ScheduleSpec {
    int outer = 1;
    std::vector<int> inner = {1};

    bool flooding() const { return inner.size() == 1; }

    int readouts_per_outer() const {
        return flooding() ? inner[0] : inner[0] + inner[1];
    }
    int total_readouts() const { return outer * readouts_per_outer(); }

    void validate() const {
        require(outer >= 1, "schedule: outer must be >= 1");
        require(inner.size() == 1 || inner.size() == 2, "schedule: inner list size must be 1 or 2");
        for (int v : inner) require(v >= 0, "schedule: negative inner count");
        require(readouts_per_outer() >= 1, "schedule: no iterations per outer loop");
    }

    std::string str() const {
        std::ostringstream os;
        os << "(" << outer << ",[";
        for (std::size_t i = 0; i < inner.size(); ++i) os << (i ? "," : "") << inner[i];
        os << "])";
        return os.str();
    }
};

ScheduleSpec parse_schedule(const std::string& text);

struct GnnConfig {
    int d = 16;
    std::vector<int> hidden = {64, 64};
    bool ufg = false;        // equalizer factors follow the matched-filter model
    bool has_check = false;  // joint graph with parity-check factors
};

/// All trainable tensors of the receiver: one update MLP per node kind and
/// per directed edge kind, one learnable attribute vector per kind, and the
/// input/output projections. Weights are shared across nodes/edges of a kind
/// and across iterations.
struct GnnParams {
    GnnConfig config;
    nn::ParamStore store;

    nn::Mlp mlp_vn, mlp_eq_fn;
    nn::Mlp mlp_eq2v, mlp_v2eq;
    nn::Mlp mlp_chk_fn, mlp_chk2v, mlp_v2chk;

    nn::Param* attr_vn = nullptr;
    nn::Param* attr_eq_fn = nullptr;
    nn::Param* attr_chk_fn = nullptr;
    nn::Param* attr_eq2v = nullptr;
    nn::Param* attr_v2eq = nullptr;
    nn::Param* attr_chk2v = nullptr;
    nn::Param* attr_v2chk = nullptr;

    nn::Param* proj_in = nullptr;       // FFG: observation -> FN state
    nn::Param* proj_in_self = nullptr;  // UFG: chi -> self-FN state
    nn::Param* proj_in_pair = nullptr;  // UFG: G entry -> pair-FN state
    nn::Param* proj_out = nullptr;      // VN state -> LLR (row vector)

    std::map<std::string, std::string> meta() const;
};

GnnParams make_gnn_params(const GnnConfig& cfg, std::uint64_t seed);

/// Shape compatibility check against checkpoint meta (throws on mismatch).
void check_gnn_meta(const GnnConfig& cfg, const std::map<std::string, std::string>& meta);

/// Index arrays extracted from a FactorGraph for vectorized updates. All
/// adjacency lists are sorted by neighbor id, which pins aggregation order.
struct GnnIndex {
    int num_vn = 0;
    int num_eq_fn = 0;
    int num_chk_fn = 0;
    bool ufg = false;

    std::vector<int> eq_edge_fn, eq_edge_vn;    // per equalizer edge
    std::vector<int> chk_edge_fn, chk_edge_vn;  // per check edge
    std::vector<std::vector<int>> vn_adj_eq, vn_adj_chk;  // per VN: edge positions
    std::vector<std::vector<int>> fn_adj_eq, fn_adj_chk;  // per FN: edge positions
    std::vector<FnDescriptor> eq_fn_desc;

    int num_eq_edges() const { return static_cast<int>(eq_edge_fn.size()); }
    int num_chk_edges() const { return static_cast<int>(chk_edge_fn.size()); }
};

GnnIndex build_gnn_index(const FactorGraph& g);

/// Per-frame scalar inputs for the equalizer factor nodes.
struct GnnInputs {
    VecXd eq_fn_a;  // FFG: y_k per FN; UFG: chi_k per self FN (0 at pair FNs)
    VecXd eq_fn_b;  // UFG: G_{kj} per pair FN (0 at self FNs); unused for FFG
};

GnnInputs make_gnn_inputs(const GnnIndex& idx, const ChannelModel& model, const VecXd& y);

/// Node/edge state tensors of one frame.
struct GnnState {
    nn::Tensor vn, eq_fn, chk_fn;
    nn::Tensor msg_eq2v, msg_v2eq, msg_chk2v, msg_v2chk;
};

enum class VnPhase { Both, EqOnly, ChkOnly };

GnnState init_state(nn::Tape& tape, const GnnIndex& idx, const GnnParams& params,
                    const GnnInputs& in);

void update_fn(nn::Tape& tape, GnnState& s, const GnnIndex& idx, const GnnParams& params,
               FnKind kind);
void update_vn(nn::Tape& tape, GnnState& s, const GnnIndex& idx, const GnnParams& params,
               VnPhase phase);
void update_edges_to_vn(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                        const GnnParams& params, FnKind kind);
void update_edges_to_fn(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                        const GnnParams& params, FnKind kind);

/// LLR readout (1 x num_vn row).
nn::Tensor readout(nn::Tape& tape, const GnnState& s, const GnnParams& params);

/// N_It iterations of FN update, edges to VNs, VN update, edges to FNs;
/// one readout per iteration.
std::vector<nn::Tensor> run_equalizer(nn::Tape& tape, const GnnIndex& idx,
                                      const GnnParams& params, const GnnInputs& in, int n_iters);

/// Joint equalization and decoding on the shared-VN graph. Flooding updates
/// both factor kinds each iteration; sequential schedules alternate
/// equalizer-only and decoder-only blocks. FN and VN states persist across
/// phases; a readout is taken after every inner iteration.
std::vector<nn::Tensor> run_jed(nn::Tape& tape, const GnnIndex& idx, const GnnParams& params,
                                const GnnInputs& in, const ScheduleSpec& schedule);

/// Forward-only helper: per-readout LLR vectors on a non-recording tape.
std::vector<VecXd> run_equalizer_llrs(const GnnIndex& idx, const GnnParams& params,
                                      const GnnInputs& in, int n_iters);
std::vector<VecXd> run_jed_llrs(const GnnIndex& idx, const GnnParams& params,
                                const GnnInputs& in, const ScheduleSpec& schedule);

inline VecXd row_to_vec(const nn::Tensor& t) {
    return t.value().row(0).transpose();
}

}  // namespace isirx::gnn
