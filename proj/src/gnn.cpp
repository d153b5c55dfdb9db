// SPDX-License-Identifier: Apache-2.0
#include "isirx/gnn.hpp"

namespace isirx::gnn {

ScheduleSpec parse_schedule(const std::string& text) {
    // "10,1" -> flooding outer=10; "3,3,5" -> sequential outer=3 inner=[3,5]
    ScheduleSpec s;
    std::vector<int> vals;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            vals.push_back(std::stoi(tok));
        } catch (...) {
            throw ParseError("bad schedule: " + text);
        }
    }
    if (vals.size() < 2 || vals.size() > 3) throw ParseError("bad schedule: " + text);
    s.outer = vals[0];
    s.inner.assign(vals.begin() + 1, vals.end());
    s.validate();
    return s;
}

std::map<std::string, std::string> GnnParams::meta() const {
    std::map<std::string, std::string> m;
    m["kind"] = config.has_check ? "gnn-jed" : "gnn-eq";
    m["graph"] = config.ufg ? "ufg" : "ffg";
    m["feature_size"] = std::to_string(config.d);
    std::string h;
    for (std::size_t i = 0; i < config.hidden.size(); ++i)
        h += (i ? "," : "") + std::to_string(config.hidden[i]);
    m["hidden"] = h;
    return m;
}

void check_gnn_meta(const GnnConfig& cfg, const std::map<std::string, std::string>& meta) {
    GnnParams probe;
    probe.config = cfg;
    const auto want = probe.meta();
    for (const auto& [k, v] : want) {
        auto it = meta.find(k);
        if (it == meta.end() || it->second != v)
            throw ParseError("incompatible checkpoint: expected " + k + "=" + v +
                             (it == meta.end() ? " (missing)" : ", found " + it->second));
    }
}

GnnParams make_gnn_params(const GnnConfig& cfg, std::uint64_t seed) {
    require(cfg.d >= 1, "feature size must be >= 1");
    GnnParams p;
    p.config = cfg;
    FrameRng rng(seed, /*stream=*/0x6e6e, /*index=*/0);

    std::vector<int> widths;
    widths.push_back(3 * cfg.d);
    for (int h : cfg.hidden) widths.push_back(h);
    widths.push_back(cfg.d);

    p.mlp_vn = nn::make_mlp(p.store, "vn.mlp", widths, rng);
    p.mlp_eq_fn = nn::make_mlp(p.store, "eqfn.mlp", widths, rng);
    p.mlp_eq2v = nn::make_mlp(p.store, "eq2v.mlp", widths, rng);
    p.mlp_v2eq = nn::make_mlp(p.store, "v2eq.mlp", widths, rng);
    if (cfg.has_check) {
        p.mlp_chk_fn = nn::make_mlp(p.store, "chkfn.mlp", widths, rng);
        p.mlp_chk2v = nn::make_mlp(p.store, "chk2v.mlp", widths, rng);
        p.mlp_v2chk = nn::make_mlp(p.store, "v2chk.mlp", widths, rng);
    }

    auto normal_init = [&](nn::Param& q, double stddev) {
        for (Eigen::Index i = 0; i < q.value.size(); ++i) q.value(i) = stddev * rng.normal();
    };

    // node attributes start at zero, edge attributes and projections at
    // N(0, 0.1^2)
    p.attr_vn = &p.store.create("vn.attr", cfg.d, 1);
    p.attr_eq_fn = &p.store.create("eqfn.attr", cfg.d, 1);
    p.attr_eq2v = &p.store.create("eq2v.attr", cfg.d, 1);
    p.attr_v2eq = &p.store.create("v2eq.attr", cfg.d, 1);
    normal_init(*p.attr_eq2v, 0.1);
    normal_init(*p.attr_v2eq, 0.1);
    if (cfg.has_check) {
        p.attr_chk_fn = &p.store.create("chkfn.attr", cfg.d, 1);
        p.attr_chk2v = &p.store.create("chk2v.attr", cfg.d, 1);
        p.attr_v2chk = &p.store.create("v2chk.attr", cfg.d, 1);
        normal_init(*p.attr_chk2v, 0.1);
        normal_init(*p.attr_v2chk, 0.1);
    }

    if (cfg.ufg) {
        p.proj_in_self = &p.store.create("proj.in_self", cfg.d, 1);
        p.proj_in_pair = &p.store.create("proj.in_pair", cfg.d, 1);
        normal_init(*p.proj_in_self, 0.1);
        normal_init(*p.proj_in_pair, 0.1);
    } else {
        p.proj_in = &p.store.create("proj.in", cfg.d, 1);
        normal_init(*p.proj_in, 0.1);
    }
    p.proj_out = &p.store.create("proj.out", 1, cfg.d);
    normal_init(*p.proj_out, 0.1);
    return p;
}

GnnIndex build_gnn_index(const FactorGraph& g) {
    for (const auto& tag : g.vn_tags)
        require(!tag.virtual_boundary, "gnn expects a pruned graph");
    GnnIndex idx;
    idx.num_vn = g.num_vn;

    std::vector<int> fn_local(g.num_fn(), -1);
    for (int f = 0; f < g.num_fn(); ++f) {
        if (g.fns[f].kind == FnKind::Check) {
            fn_local[f] = idx.num_chk_fn++;
        } else {
            if (g.fns[f].kind != FnKind::FfgObs) idx.ufg = true;
            fn_local[f] = idx.num_eq_fn++;
            idx.eq_fn_desc.push_back(g.fns[f]);
        }
    }

    std::vector<int> edge_pos(g.num_edges(), -1);
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto& ed = g.edges[e];
        if (g.fns[ed.fn].kind == FnKind::Check) {
            edge_pos[e] = static_cast<int>(idx.chk_edge_fn.size());
            idx.chk_edge_fn.push_back(fn_local[ed.fn]);
            idx.chk_edge_vn.push_back(ed.vn);
        } else {
            edge_pos[e] = static_cast<int>(idx.eq_edge_fn.size());
            idx.eq_edge_fn.push_back(fn_local[ed.fn]);
            idx.eq_edge_vn.push_back(ed.vn);
        }
    }

    idx.vn_adj_eq.resize(idx.num_vn);
    idx.vn_adj_chk.resize(idx.num_vn);
    for (int v = 0; v < g.num_vn; ++v) {
        for (int e : g.vn_edges[v]) {  // sorted by fn id
            if (g.fns[g.edges[e].fn].kind == FnKind::Check)
                idx.vn_adj_chk[v].push_back(edge_pos[e]);
            else
                idx.vn_adj_eq[v].push_back(edge_pos[e]);
        }
    }
    idx.fn_adj_eq.resize(idx.num_eq_fn);
    idx.fn_adj_chk.resize(idx.num_chk_fn);
    for (int f = 0; f < g.num_fn(); ++f) {
        for (int e : g.fn_edges[f]) {  // sorted by vn id
            if (g.fns[f].kind == FnKind::Check)
                idx.fn_adj_chk[fn_local[f]].push_back(edge_pos[e]);
            else
                idx.fn_adj_eq[fn_local[f]].push_back(edge_pos[e]);
        }
    }
    return idx;
}

GnnInputs make_gnn_inputs(const GnnIndex& idx, const ChannelModel& model, const VecXd& y) {
    GnnInputs in;
    in.eq_fn_a = VecXd::Zero(idx.num_eq_fn);
    in.eq_fn_b = VecXd::Zero(idx.num_eq_fn);
    if (!idx.ufg) {
        require(y.size() == idx.num_eq_fn, "gnn inputs: observation count must match FN count");
        for (int f = 0; f < idx.num_eq_fn; ++f) in.eq_fn_a[f] = y[idx.eq_fn_desc[f].a];
    } else {
        // number of data symbols = number of self factors
        int n = 0;
        for (const auto& d : idx.eq_fn_desc)
            if (d.kind == FnKind::UfgSelf) ++n;
        const UngerboeckData ud = ungerboeck_data(model, y, n);
        for (int f = 0; f < idx.num_eq_fn; ++f) {
            const auto& d = idx.eq_fn_desc[f];
            if (d.kind == FnKind::UfgSelf)
                in.eq_fn_a[f] = ud.chi[d.a];
            else
                in.eq_fn_b[f] = ud.G(d.a, d.b);
        }
    }
    return in;
}

GnnState init_state(nn::Tape& tape, const GnnIndex& idx, const GnnParams& params,
                    const GnnInputs& in) {
    const int d = params.config.d;
    require(in.eq_fn_a.size() == idx.num_eq_fn, "init_state: input length mismatch");
    GnnState s;
    if (!idx.ufg) {
        require(params.proj_in, "init_state: params built for the UFG family");
        s.eq_fn = nn::matmul(tape.leaf(*params.proj_in),
                             tape.constant(MatXd(in.eq_fn_a.transpose())));
    } else {
        require(params.proj_in_self && params.proj_in_pair,
                "init_state: params built for the FFG family");
        nn::Tensor a = nn::matmul(tape.leaf(*params.proj_in_self),
                                  tape.constant(MatXd(in.eq_fn_a.transpose())));
        nn::Tensor b = nn::matmul(tape.leaf(*params.proj_in_pair),
                                  tape.constant(MatXd(in.eq_fn_b.transpose())));
        s.eq_fn = nn::add(a, b);
    }
    s.vn = tape.constant(MatXd::Zero(d, idx.num_vn));
    s.chk_fn = tape.constant(MatXd::Zero(d, idx.num_chk_fn));
    s.msg_eq2v = tape.constant(MatXd::Zero(d, idx.num_eq_edges()));
    s.msg_v2eq = tape.constant(MatXd::Zero(d, idx.num_eq_edges()));
    s.msg_chk2v = tape.constant(MatXd::Zero(d, idx.num_chk_edges()));
    s.msg_v2chk = tape.constant(MatXd::Zero(d, idx.num_chk_edges()));
    return s;
}

void update_fn(nn::Tape& tape, GnnState& s, const GnnIndex& idx, const GnnParams& params,
               FnKind kind) {
    if (kind == FnKind::Check) {
        if (idx.num_chk_fn == 0) return;
        nn::Tensor agg = nn::scatter_mean({s.msg_v2chk}, {&idx.fn_adj_chk}, idx.num_chk_fn);
        nn::Tensor in = nn::concat_rows(
            {s.chk_fn, agg, nn::broadcast_col(tape.leaf(*params.attr_chk_fn), idx.num_chk_fn)});
        s.chk_fn = params.mlp_chk_fn.apply(tape, in);
    } else {
        if (idx.num_eq_fn == 0) return;
        nn::Tensor agg = nn::scatter_mean({s.msg_v2eq}, {&idx.fn_adj_eq}, idx.num_eq_fn);
        nn::Tensor in = nn::concat_rows(
            {s.eq_fn, agg, nn::broadcast_col(tape.leaf(*params.attr_eq_fn), idx.num_eq_fn)});
        s.eq_fn = params.mlp_eq_fn.apply(tape, in);
    }
}

void update_vn(nn::Tape& tape, GnnState& s, const GnnIndex& idx, const GnnParams& params,
               VnPhase phase) {
    std::vector<nn::Tensor> sources;
    std::vector<const std::vector<std::vector<int>>*> adj;
    if (phase != VnPhase::ChkOnly && idx.num_eq_edges() > 0) {
        sources.push_back(s.msg_eq2v);
        adj.push_back(&idx.vn_adj_eq);
    }
    if (phase != VnPhase::EqOnly && idx.num_chk_edges() > 0) {
        sources.push_back(s.msg_chk2v);
        adj.push_back(&idx.vn_adj_chk);
    }
    nn::Tensor agg = sources.empty()
                         ? tape.constant(MatXd::Zero(params.config.d, idx.num_vn))
                         : nn::scatter_mean(sources, adj, idx.num_vn);
    nn::Tensor in = nn::concat_rows(
        {s.vn, agg, nn::broadcast_col(tape.leaf(*params.attr_vn), idx.num_vn)});
    s.vn = params.mlp_vn.apply(tape, in);
}

void update_edges_to_vn(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                        const GnnParams& params, FnKind kind) {
    if (kind == FnKind::Check) {
        if (idx.num_chk_edges() == 0) return;
        nn::Tensor in = nn::concat_rows(
            {nn::gather_cols(s.chk_fn, idx.chk_edge_fn), nn::gather_cols(s.vn, idx.chk_edge_vn),
             nn::broadcast_col(tape.leaf(*params.attr_chk2v), idx.num_chk_edges())});
        s.msg_chk2v = params.mlp_chk2v.apply(tape, in);
    } else {
        if (idx.num_eq_edges() == 0) return;
        nn::Tensor in = nn::concat_rows(
            {nn::gather_cols(s.eq_fn, idx.eq_edge_fn), nn::gather_cols(s.vn, idx.eq_edge_vn),
             nn::broadcast_col(tape.leaf(*params.attr_eq2v), idx.num_eq_edges())});
        s.msg_eq2v = params.mlp_eq2v.apply(tape, in);
    }
}

void update_edges_to_fn(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                        const GnnParams& params, FnKind kind) {
    if (kind == FnKind::Check) {
        if (idx.num_chk_edges() == 0) return;
        nn::Tensor in = nn::concat_rows(
            {nn::gather_cols(s.vn, idx.chk_edge_vn), nn::gather_cols(s.chk_fn, idx.chk_edge_fn),
             nn::broadcast_col(tape.leaf(*params.attr_v2chk), idx.num_chk_edges())});
        s.msg_v2chk = params.mlp_v2chk.apply(tape, in);
    } else {
        if (idx.num_eq_edges() == 0) return;
        nn::Tensor in = nn::concat_rows(
            {nn::gather_cols(s.vn, idx.eq_edge_vn), nn::gather_cols(s.eq_fn, idx.eq_edge_fn),
             nn::broadcast_col(tape.leaf(*params.attr_v2eq), idx.num_eq_edges())});
        s.msg_v2eq = params.mlp_v2eq.apply(tape, in);
    }
}

nn::Tensor readout(nn::Tape& tape, const GnnState& s, const GnnParams& params) {
    return nn::matmul(tape.leaf(*params.proj_out), s.vn);
}

namespace {

void flooding_iteration(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                        const GnnParams& params) {
    update_fn(tape, s, idx, params, FnKind::FfgObs);
    if (idx.num_chk_fn > 0) update_fn(tape, s, idx, params, FnKind::Check);
    update_edges_to_vn(tape, s, idx, params, FnKind::FfgObs);
    if (idx.num_chk_fn > 0) update_edges_to_vn(tape, s, idx, params, FnKind::Check);
    update_vn(tape, s, idx, params, VnPhase::Both);
    update_edges_to_fn(tape, s, idx, params, FnKind::FfgObs);
    if (idx.num_chk_fn > 0) update_edges_to_fn(tape, s, idx, params, FnKind::Check);
}

void single_kind_iteration(nn::Tape& tape, GnnState& s, const GnnIndex& idx,
                           const GnnParams& params, bool check_side) {
    const FnKind kind = check_side ? FnKind::Check : FnKind::FfgObs;
    update_fn(tape, s, idx, params, kind);
    update_edges_to_vn(tape, s, idx, params, kind);
    update_vn(tape, s, idx, params, check_side ? VnPhase::ChkOnly : VnPhase::EqOnly);
    update_edges_to_fn(tape, s, idx, params, kind);
}

}  // namespace

std::vector<nn::Tensor> run_equalizer(nn::Tape& tape, const GnnIndex& idx,
                                      const GnnParams& params, const GnnInputs& in, int n_iters) {
    require(idx.num_chk_fn == 0, "run_equalizer expects a pure equalization graph");
    if (n_iters == 0) {
        GnnState s = init_state(tape, idx, params, in);
        return {readout(tape, s, params)};
    }
    return run_jed(tape, idx, params, in, ScheduleSpec{n_iters, {1}});
}

std::vector<nn::Tensor> run_jed(nn::Tape& tape, const GnnIndex& idx, const GnnParams& params,
                                const GnnInputs& in, const ScheduleSpec& schedule) {
    schedule.validate();
    GnnState s = init_state(tape, idx, params, in);
    std::vector<nn::Tensor> outs;
    outs.reserve(schedule.total_readouts());
    for (int o = 0; o < schedule.outer; ++o) {
        if (schedule.flooding()) {
            for (int t = 0; t < schedule.inner[0]; ++t) {
                flooding_iteration(tape, s, idx, params);
                outs.push_back(readout(tape, s, params));
            }
        } else {
            for (int t = 0; t < schedule.inner[0]; ++t) {
                single_kind_iteration(tape, s, idx, params, /*check_side=*/false);
                outs.push_back(readout(tape, s, params));
            }
            for (int t = 0; t < schedule.inner[1]; ++t) {
                single_kind_iteration(tape, s, idx, params, /*check_side=*/true);
                outs.push_back(readout(tape, s, params));
            }
        }
    }
    return outs;
}

std::vector<VecXd> run_equalizer_llrs(const GnnIndex& idx, const GnnParams& params,
                                      const GnnInputs& in, int n_iters) {
    nn::Tape tape(/*recording=*/false);
    auto outs = run_equalizer(tape, idx, params, in, n_iters);
    std::vector<VecXd> llrs;
    llrs.reserve(outs.size());
    for (const auto& t : outs) llrs.push_back(row_to_vec(t));
    return llrs;
}

std::vector<VecXd> run_jed_llrs(const GnnIndex& idx, const GnnParams& params,
                                const GnnInputs& in, const ScheduleSpec& schedule) {
    nn::Tape tape(/*recording=*/false);
    auto outs = run_jed(tape, idx, params, in, schedule);
    std::vector<VecXd> llrs;
    llrs.reserve(outs.size());
    for (const auto& t : outs) llrs.push_back(row_to_vec(t));
    return llrs;
}

}  // namespace isirx::gnn
