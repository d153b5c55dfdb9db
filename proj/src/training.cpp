// SPDX-License-Identifier: Apache-2.0
#include "isirx/training.hpp"

#include "isirx/parallel.hpp"

#include <unordered_map>

namespace isirx {

namespace {

constexpr std::uint64_t kStreamTrain = 0x545241494e;  // frame streams
constexpr std::uint64_t kStreamVal = 0x56414c;

struct FrameWork {
    VecXd grad;
    double loss = 0.0;
    double weight = 1.0;  // contribution to the batch mean
};

using FrameFn = std::function<FrameWork(int step, int unit)>;
using ValFn = std::function<double(std::uint64_t)>;

// frames processed per tape; fixed so chunk boundaries (and therefore all
// float reductions) do not depend on the worker count
constexpr int kFramesPerTape = 32;

std::unordered_map<const nn::Param*, Eigen::Index> param_offsets(const nn::ParamStore& store) {
    std::unordered_map<const nn::Param*, Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < store.size(); ++i) {
        offsets[&store.at(i)] = at;
        at += store.at(i).value.size();
    }
    return offsets;
}

/// Shared driver: batches, ordered gradient reduction, Adam, validation,
/// checkpointing, NaN-abort. Deterministic for a fixed config regardless of
/// the worker count (per-frame gradients are reduced in frame order).
TrainResult training_loop(const TrainConfig& cfg, nn::ParamStore& store,
                          const std::map<std::string, std::string>& meta, int units_per_step,
                          const FrameFn& frame_fn, const ValFn& val_fn) {
    cfg.validate();
    TrainResult result;
    nn::Adam adam(cfg.lr);
    const Eigen::Index n_scalars = static_cast<Eigen::Index>(store.num_scalars());

    auto save = [&](const std::string& path) {
        if (!path.empty()) nn::save_checkpoint(path, store, meta);
    };
    auto run_validation = [&](int step) {
        std::function<double(int)> one = [&](int i) {
            return val_fn(static_cast<std::uint64_t>(i));
        };
        auto vals = parallel_map<double>(cfg.validation_batch, cfg.threads, one);
        double acc = 0.0;
        for (double v : vals) acc += v;
        const double mean = acc / static_cast<double>(vals.size());
        result.validation_trace.emplace_back(step, mean);
        if (mean < result.best_validation) {
            result.best_validation = mean;
            result.best_step = step;
            if (!cfg.checkpoint_path.empty()) save(cfg.checkpoint_path + ".best");
        }
        return mean;
    };

    for (int step = 0; step < cfg.steps; ++step) {
        std::function<FrameWork(int)> one = [&](int u) { return frame_fn(step, u); };
        auto works = parallel_map<FrameWork>(units_per_step, cfg.threads, one);

        double loss = 0.0;
        VecXd grad = VecXd::Zero(n_scalars);
        for (const auto& w : works) {  // unit order fixes the reduction
            loss += w.weight * w.loss;
            grad += w.weight * w.grad;
        }

        if (!std::isfinite(loss)) {
            save(cfg.checkpoint_path);  // params are still the last finite state
            throw std::runtime_error("training diverged (non-finite loss) at step " +
                                     std::to_string(step));
        }
        if (cfg.grad_clip) {
            const double norm = grad.norm();
            if (norm > cfg.grad_clip_norm) grad *= cfg.grad_clip_norm / norm;
        }
        store.zero_grad();
        store.add_flat_grad(grad);
        if (cfg.lr_final > 0.0 && cfg.steps > 1) {
            const double frac = static_cast<double>(step) / (cfg.steps - 1);
            adam.set_learning_rate(cfg.lr * std::pow(cfg.lr_final / cfg.lr, frac));
        }
        adam.step(store);
        result.loss_trace.push_back(loss);

        const int done = step + 1;
        if (cfg.validation_interval > 0 && done % cfg.validation_interval == 0)
            run_validation(done);
        if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0)
            save(cfg.checkpoint_path);
    }
    save(cfg.checkpoint_path);
    return result;
}

VecXd harvest_flat_grad(nn::Tape& tape, const nn::ParamStore& store,
                        const std::unordered_map<const nn::Param*, Eigen::Index>& offsets) {
    VecXd flat = VecXd::Zero(static_cast<Eigen::Index>(store.num_scalars()));
    tape.for_each_param_grad([&](nn::Param& p, const MatXd& g) {
        flat.segment(offsets.at(&p), g.size()) +=
            Eigen::Map<const VecXd>(g.data(), g.size());
    });
    return flat;
}

rad::Var bce_bits_var(const std::vector<rad::Var>& llr, const VecXi& bits) {
    require(static_cast<Eigen::Index>(llr.size()) == bits.size(), "bce: length mismatch");
    rad::Var acc(0.0);
    for (Eigen::Index i = 0; i < bits.size(); ++i) {
        const double s = bits[i] == 1 ? 1.0 : -1.0;
        acc += rad::maxstar(rad::Var(0.0), s * llr[static_cast<std::size_t>(i)]);
    }
    return acc / (static_cast<double>(bits.size()) * std::log(2.0));
}

}  // namespace

namespace {

/// Chunk layout of a batch: all chunks have kFramesPerTape frames except a
/// possibly smaller last one.
struct ChunkPlan {
    int units = 1;
    int full = 0;     // frames in a full chunk
    int last = 0;     // frames in the last chunk
    int frames_in(int unit) const { return unit + 1 == units ? last : full; }
    int first_frame(int unit) const { return unit * full; }
};

ChunkPlan plan_chunks(int batch) {
    ChunkPlan p;
    p.full = std::min(batch, kFramesPerTape);
    p.units = (batch + p.full - 1) / p.full;
    p.last = batch - (p.units - 1) * p.full;
    return p;
}

gnn::GnnInputs concat_inputs(const std::vector<gnn::GnnInputs>& parts) {
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.eq_fn_a.size();
    gnn::GnnInputs out;
    out.eq_fn_a.resize(total);
    out.eq_fn_b.resize(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.eq_fn_a.segment(at, p.eq_fn_a.size()) = p.eq_fn_a;
        out.eq_fn_b.segment(at, p.eq_fn_b.size()) = p.eq_fn_b;
        at += p.eq_fn_a.size();
    }
    return out;
}

VecXi concat_bits(const std::vector<VecXi>& parts) {
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.size();
    VecXi out(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

}  // namespace

TrainResult train_equalizer(const TrainConfig& cfg, const VecXd& taps,
                            const FactorGraph& eq_graph, int n_iters, gnn::GnnParams& params) {
    cfg.validate();
    require(n_iters >= 1, "train_equalizer: need at least one iteration");
    {
        const gnn::GnnIndex probe = gnn::build_gnn_index(eq_graph);
        require(probe.num_chk_fn == 0, "train_equalizer expects a pure equalization graph");
    }
    const auto offsets = param_offsets(params.store);
    const int n = eq_graph.num_vn;
    const ChunkPlan plan = plan_chunks(cfg.batch);

    // frames batch through disjoint copies of the graph (one tape per chunk)
    std::map<int, gnn::GnnIndex> repl;
    repl.emplace(plan.full, gnn::build_gnn_index(replicate_graph(eq_graph, plan.full)));
    if (plan.last != plan.full)
        repl.emplace(plan.last, gnn::build_gnn_index(replicate_graph(eq_graph, plan.last)));
    const gnn::GnnIndex val_idx = gnn::build_gnn_index(eq_graph);

    FrameFn frame_fn = [&, n](int step, int unit) {
        const int k = plan.frames_in(unit);
        std::vector<gnn::GnnInputs> ins;
        std::vector<VecXi> bits;
        for (int f = 0; f < k; ++f) {
            const std::uint64_t gi =
                static_cast<std::uint64_t>(step) * cfg.batch + plan.first_frame(unit) + f;
            FrameRng rng(cfg.seed, kStreamTrain, gi);
            const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
            const ChannelModel m(taps, sigma_from_ebn0(snr, 1.0));
            const UncodedFrame fr = make_uncoded_frame(n, m, rng);
            ins.push_back(gnn::make_gnn_inputs(val_idx, m, fr.y));
            bits.push_back(fr.bits);
        }
        const gnn::GnnInputs in = concat_inputs(ins);
        const VecXi target = concat_bits(bits);
        nn::Tape tape(true);
        const auto outs = gnn::run_equalizer(tape, repl.at(k), params, in, n_iters);
        std::vector<nn::Tensor> losses;
        losses.reserve(outs.size());
        for (const auto& o : outs) losses.push_back(nn::bce_from_llr(o, target));
        nn::Tensor loss = nn::mean_scalars(losses);
        tape.backward(loss);
        return FrameWork{harvest_flat_grad(tape, params.store, offsets), loss.value()(0, 0),
                         static_cast<double>(k) / cfg.batch};
    };
    ValFn val_fn = [&, n](std::uint64_t vi) {
        FrameRng rng(cfg.seed, kStreamVal, vi);
        const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        const ChannelModel m(taps, sigma_from_ebn0(snr, 1.0));
        const UncodedFrame fr = make_uncoded_frame(n, m, rng);
        nn::Tape tape(false);
        const gnn::GnnInputs in = gnn::make_gnn_inputs(val_idx, m, fr.y);
        const auto outs = gnn::run_equalizer(tape, val_idx, params, in, n_iters);
        std::vector<nn::Tensor> losses;
        for (const auto& o : outs) losses.push_back(nn::bce_from_llr(o, fr.bits));
        return nn::mean_scalars(losses).value()(0, 0);
    };

    auto meta = params.meta();
    meta["iters"] = std::to_string(n_iters);
    return training_loop(cfg, params.store, meta, plan.units, frame_fn, val_fn);
}

TrainResult train_jed(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                      const Interleaver& pi, const FactorGraph& joint_graph,
                      const gnn::ScheduleSpec& schedule, gnn::GnnParams& params) {
    cfg.validate();
    schedule.validate();
    const gnn::GnnIndex idx = gnn::build_gnn_index(joint_graph);
    require(idx.num_vn == code.n_code(), "train_jed: graph/code mismatch");
    const auto offsets = param_offsets(params.store);
    const double rate = code.rate();
    const ChunkPlan plan = plan_chunks(cfg.batch);

    std::map<int, gnn::GnnIndex> repl;
    repl.emplace(plan.full, gnn::build_gnn_index(replicate_graph(joint_graph, plan.full)));
    if (plan.last != plan.full)
        repl.emplace(plan.last, gnn::build_gnn_index(replicate_graph(joint_graph, plan.last)));

    FrameFn frame_fn = [&](int step, int unit) {
        const int k = plan.frames_in(unit);
        std::vector<gnn::GnnInputs> ins;
        std::vector<VecXi> codewords;
        for (int f = 0; f < k; ++f) {
            const std::uint64_t gi =
                static_cast<std::uint64_t>(step) * cfg.batch + plan.first_frame(unit) + f;
            FrameRng rng(cfg.seed, kStreamTrain, gi);
            const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
            const ChannelModel m(taps, sigma_from_ebn0(snr, rate));
            const CodedFrame fr = make_coded_frame(code, pi, m, rng);
            ins.push_back(gnn::make_gnn_inputs(idx, m, fr.y));
            codewords.push_back(fr.c);
        }
        const gnn::GnnInputs in = concat_inputs(ins);
        // loss over all code-bit VNs, punctured ones included
        const VecXi target = concat_bits(codewords);
        nn::Tape tape(true);
        const auto outs = gnn::run_jed(tape, repl.at(k), params, in, schedule);
        std::vector<nn::Tensor> losses;
        losses.reserve(outs.size());
        for (const auto& o : outs) losses.push_back(nn::bce_from_llr(o, target));
        nn::Tensor loss = nn::mean_scalars(losses);
        tape.backward(loss);
        return FrameWork{harvest_flat_grad(tape, params.store, offsets), loss.value()(0, 0),
                         static_cast<double>(k) / cfg.batch};
    };
    ValFn val_fn = [&](std::uint64_t vi) {
        FrameRng rng(cfg.seed, kStreamVal, vi);
        const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        const ChannelModel m(taps, sigma_from_ebn0(snr, rate));
        const CodedFrame fr = make_coded_frame(code, pi, m, rng);
        nn::Tape tape(false);
        const gnn::GnnInputs in = gnn::make_gnn_inputs(idx, m, fr.y);
        const auto outs = gnn::run_jed(tape, idx, params, in, schedule);
        std::vector<nn::Tensor> losses;
        for (const auto& o : outs) losses.push_back(nn::bce_from_llr(o, fr.c));
        return nn::mean_scalars(losses).value()(0, 0);
    };

    auto meta = params.meta();
    meta["schedule"] = schedule.str();
    meta["interleaver_seed"] = std::to_string(pi.seed());
    return training_loop(cfg, params.store, meta, plan.units, frame_fn, val_fn);
}

TrainResult finetune_jed(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                         const Interleaver& pi, const FactorGraph& joint_graph,
                         const gnn::ScheduleSpec& stage2, const std::string& stage1_checkpoint,
                         gnn::GnnParams& params) {
    const auto meta = nn::load_checkpoint(stage1_checkpoint, params.store);
    gnn::check_gnn_meta(params.config, meta);
    return train_jed(cfg, taps, code, pi, joint_graph, stage2, params);
}

std::map<std::string, std::string> NbpParams::meta(const FactorGraph& g) const {
    std::map<std::string, std::string> m;
    m["kind"] = "nbp";
    m["graph"] = g.fns[0].kind == FnKind::FfgObs ? "ffg" : "ufg";
    m["num_vn"] = std::to_string(g.num_vn);
    m["num_edges"] = std::to_string(g.num_edges());
    m["iters"] = std::to_string(iters);
    return m;
}

NbpParams make_nbp_params(const FactorGraph& eq_graph, int iters) {
    require(iters >= 1, "nbp: iteration count must be >= 1");
    NbpParams p;
    p.iters = iters;
    p.weights = &p.store.create("nbp.weights", iters, eq_graph.num_edges());
    p.weights->value.setOnes();
    return p;
}

namespace {

EdgeWeights<rad::Var> leaf_weights(const MatXd& values, std::vector<std::vector<int>>& ids) {
    EdgeWeights<rad::Var> w(static_cast<std::size_t>(values.rows()));
    ids.assign(static_cast<std::size_t>(values.rows()), {});
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        w[t].reserve(static_cast<std::size_t>(values.cols()));
        for (Eigen::Index e = 0; e < values.cols(); ++e) {
            rad::Var v = rad::leaf(values(t, e));
            w[t].push_back(v);
            ids[t].push_back(v.idx);
        }
    }
    return w;
}

}  // namespace

TrainResult train_nbp(const TrainConfig& cfg, const VecXd& taps, const FactorGraph& eq_graph,
                      NbpParams& params, bool exact) {
    const int n = eq_graph.num_vn;
    const Eigen::Index n_scalars = params.weights->value.size();

    auto run_loss = [&](FrameRng& rng, bool with_grad, VecXd* grad_out) {
        const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        const ChannelModel m(taps, sigma_from_ebn0(snr, 1.0));
        const UncodedFrame fr = make_uncoded_frame(n, m, rng);
        rad::Tape tape;
        rad::TapeScope scope(tape);
        std::vector<std::vector<int>> ids;
        const EdgeWeights<rad::Var> w = leaf_weights(params.weights->value, ids);
        const std::vector<rad::Var> apriori;
        const auto outs =
            bp_equalize_t<rad::Var>(eq_graph, m, fr.y, apriori, params.iters, 0.0, &w, exact);
        rad::Var loss(0.0);
        for (const auto& app : outs) loss += bce_bits_var(app, fr.bits);
        loss = loss / static_cast<double>(outs.size());
        if (with_grad) {
            tape.backward(loss.idx);
            // ParamStore flattening is column-major
            VecXd flat = VecXd::Zero(n_scalars);
            const Eigen::Index rows = params.weights->value.rows();
            for (Eigen::Index t = 0; t < rows; ++t)
                for (Eigen::Index e = 0; e < params.weights->value.cols(); ++e)
                    flat[e * rows + t] = tape.adjoint(ids[t][e]);
            *grad_out = flat;
        }
        return loss.v;
    };

    FrameFn frame_fn = [&](int step, int unit) {
        FrameRng rng(cfg.seed, kStreamTrain,
                     static_cast<std::uint64_t>(step) * cfg.batch + unit);
        FrameWork w;
        w.weight = 1.0 / cfg.batch;
        w.loss = run_loss(rng, true, &w.grad);
        return w;
    };
    ValFn val_fn = [&](std::uint64_t vi) {
        FrameRng rng(cfg.seed, kStreamVal, vi);
        return run_loss(rng, false, nullptr);
    };
    return training_loop(cfg, params.store, params.meta(eq_graph), cfg.batch, frame_fn, val_fn);
}

std::map<std::string, std::string> DuiddParams::meta(const FactorGraph& g) const {
    std::map<std::string, std::string> m;
    m["kind"] = "duidd";
    m["graph"] = g.fns[0].kind == FnKind::FfgObs ? "ffg" : "ufg";
    m["num_edges"] = std::to_string(g.num_edges());
    m["outer"] = std::to_string(outer);
    m["inner_eq"] = std::to_string(inner_eq);
    m["inner_dec"] = std::to_string(inner_dec);
    return m;
}

DuiddWeights<double> DuiddParams::weights_view() const {
    DuiddWeights<double> w;
    const MatXd& nb = nbp->value;
    w.nbp.resize(static_cast<std::size_t>(nb.rows()));
    for (Eigen::Index t = 0; t < nb.rows(); ++t)
        for (Eigen::Index e = 0; e < nb.cols(); ++e) w.nbp[t].push_back(nb(t, e));
    auto fill = [](const MatXd& m, std::vector<std::vector<double>>& out) {
        out.resize(static_cast<std::size_t>(m.rows()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out[r].push_back(m(r, c));
    };
    fill(eq_to_dec->value, w.eq_to_dec);
    fill(dec_to_eq->value, w.dec_to_eq);
    return w;
}

DuiddParams make_duidd_params(const FactorGraph& eq_graph, const LdpcCode& code, int outer,
                              int inner_eq, int inner_dec) {
    require(outer >= 1 && inner_eq >= 1 && inner_dec >= 1, "duidd: degenerate schedule");
    DuiddParams p;
    p.outer = outer;
    p.inner_eq = inner_eq;
    p.inner_dec = inner_dec;
    p.nbp = &p.store.create("duidd.nbp", outer * inner_eq, eq_graph.num_edges());
    p.eq_to_dec = &p.store.create("duidd.eq_to_dec", outer, code.n_transmitted());
    p.dec_to_eq = &p.store.create("duidd.dec_to_eq", outer, code.n_transmitted());
    p.nbp->value.setOnes();
    p.eq_to_dec->value.setOnes();
    p.dec_to_eq->value.setOnes();
    return p;
}

TrainResult train_duidd(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                        const Interleaver& pi, const FactorGraph& eq_graph, DuiddParams& params) {
    const double rate = code.rate();
    const auto offsets = param_offsets(params.store);

    auto run_loss = [&](FrameRng& rng, bool with_grad, VecXd* grad_out) {
        const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        const ChannelModel m(taps, sigma_from_ebn0(snr, rate));
        const CodedFrame fr = make_coded_frame(code, pi, m, rng);
        rad::Tape tape;
        rad::TapeScope scope(tape);

        DuiddWeights<rad::Var> w;
        std::vector<std::vector<int>> nbp_ids, e2d_ids, d2e_ids;
        w.nbp = leaf_weights(params.nbp->value, nbp_ids);
        {
            auto leaf_mat = [&](const MatXd& vals, std::vector<std::vector<int>>& ids) {
                std::vector<std::vector<rad::Var>> out(static_cast<std::size_t>(vals.rows()));
                ids.assign(static_cast<std::size_t>(vals.rows()), {});
                for (Eigen::Index r = 0; r < vals.rows(); ++r)
                    for (Eigen::Index c = 0; c < vals.cols(); ++c) {
                        rad::Var v = rad::leaf(vals(r, c));
                        out[r].push_back(v);
                        ids[r].push_back(v.idx);
                    }
                return out;
            };
            w.eq_to_dec = leaf_mat(params.eq_to_dec->value, e2d_ids);
            w.dec_to_eq = leaf_mat(params.dec_to_eq->value, d2e_ids);
        }

        const auto per_outer = duidd_forward<rad::Var>(eq_graph, m, fr.y, code, pi, params.outer,
                                                       params.inner_eq, params.inner_dec, w);
        rad::Var loss(0.0);
        for (const auto& llr : per_outer) loss += bce_bits_var(llr, fr.c);
        loss = loss / static_cast<double>(per_outer.size());

        if (with_grad) {
            tape.backward(loss.idx);
            VecXd flat = VecXd::Zero(static_cast<Eigen::Index>(params.store.num_scalars()));
            auto emit = [&](nn::Param& p, const std::vector<std::vector<int>>& ids) {
                const Eigen::Index base = offsets.at(&p);
                const Eigen::Index rows = p.value.rows();
                for (Eigen::Index r = 0; r < rows; ++r)
                    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
                        flat[base + c * rows + r] = tape.adjoint(ids[r][c]);
            };
            emit(*params.nbp, nbp_ids);
            emit(*params.eq_to_dec, e2d_ids);
            emit(*params.dec_to_eq, d2e_ids);
            *grad_out = flat;
        }
        return loss.v;
    };

    FrameFn frame_fn = [&](int step, int unit) {
        FrameRng rng(cfg.seed, kStreamTrain,
                     static_cast<std::uint64_t>(step) * cfg.batch + unit);
        FrameWork w;
        w.weight = 1.0 / cfg.batch;
        w.loss = run_loss(rng, true, &w.grad);
        return w;
    };
    ValFn val_fn = [&](std::uint64_t vi) {
        FrameRng rng(cfg.seed, kStreamVal, vi);
        return run_loss(rng, false, nullptr);
    };
    return training_loop(cfg, params.store, params.meta(eq_graph), cfg.batch, frame_fn, val_fn);
}

}  // namespace isirx
