// SPDX-License-Identifier: Apache-2.0
#include "isirx/cli.hpp"

#include "isirx/evaluation.hpp"
#include "isirx/parallel.hpp"
#include "isirx/training.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

namespace isirx {

namespace {

struct ChannelArgs {
    std::string preset = "proakis-c";
    std::string taps_csv;

    VecXd taps() const {
        if (!taps_csv.empty()) {
            std::vector<double> v;
            std::istringstream is(taps_csv);
            std::string tok;
            while (std::getline(is, tok, ',')) v.push_back(std::stod(tok));
            require(!v.empty(), "empty tap list");
            return Eigen::Map<const VecXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        return make_channel_preset(preset, 1.0).taps;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--channel", preset,
                        "channel preset: proakis-c, proakis-b or awgn")
            ->capture_default_str();
        cmd->add_option("--taps", taps_csv, "explicit taps, comma separated (overrides preset)");
    }
};

struct CodeArgs {
    std::string code_path;
    std::string punct_path;
    std::uint64_t interleaver_seed = 1;

    void attach(CLI::App* cmd, bool required) {
        auto* o = cmd->add_option("--code", code_path, "parity-check matrix (alist format)");
        if (required) o->required();
        cmd->add_option("--punct", punct_path, "puncture sidecar (0-based column per line)");
        cmd->add_option("--interleaver-seed", interleaver_seed, "interleaver permutation seed")
            ->capture_default_str();
    }

    LdpcCode load() const { return load_alist(code_path, punct_path); }
};

/// Output directory override; relative output paths land under $ISIRX_OUTDIR.
std::string resolve_out(const std::string& path) {
    if (path.empty()) return path;
    const char* dir = std::getenv("ISIRX_OUTDIR");
    if (!dir || *dir == '\0') return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(dir) / p).string();
}

void write_manifest(const CLI::App& app, const std::string& next_to) {
    if (next_to.empty()) return;
    std::string text = "# isirx run manifest; rerun with --config <this file>\n";
    text += app.config_to_str(true, true);
    write_file(next_to + ".manifest", text);
}

void write_loss_trace(const std::string& path, const TrainResult& r) {
    if (path.empty()) return;
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
        out += std::to_string(i + 1) + "," + std::to_string(r.loss_trace[i]) + "\n";
    write_file(path, out);
}

gnn::ScheduleSpec parse_schedule_arg(const std::string& s) { return gnn::parse_schedule(s); }

/// "lo:hi" or a single value.
std::pair<double, double> parse_range(const std::string& text) {
    std::vector<std::string> parts;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ':')) parts.push_back(tok);
    try {
        if (parts.size() == 1) {
            const double v = std::stod(parts[0]);
            return {v, v};
        }
        if (parts.size() == 2) return {std::stod(parts[0]), std::stod(parts[1])};
    } catch (const std::invalid_argument&) {
    }
    throw ParseError("bad SNR range: " + text);
}

}  // namespace

int cli_run(const std::vector<std::string>& argv) {
    CLI::App app{"link-level simulation and learned receivers for ISI channels"};
    app.set_config("--config", "", "read options from an INI config file or run manifest");
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    int threads = default_threads();
    std::uint64_t seed = 1;
    app.add_option("--threads", threads, "worker pool size")->capture_default_str();
    app.add_option("--seed", seed, "run seed")->capture_default_str();

    // ---------------------------------------------------------------- train-eq
    auto* te = app.add_subcommand("train-eq", "train the equalizer network (uncoded frames)");
    te->configurable();
    ChannelArgs te_ch;
    te_ch.attach(te);
    int te_n = 132, te_iters = 8, te_d = 16;
    std::string te_hidden = "64,64", te_graph = "ffg", te_snr = "10:14";
    std::string te_ckpt = "equalizer.ckpt", te_init, te_loss_out;
    TrainConfig te_cfg;
    te_cfg.batch = 256;
    te_cfg.steps = 50000;
    te->add_option("--n", te_n, "block length (symbols)")->capture_default_str();
    te->add_option("--iters", te_iters, "message-passing iterations")->capture_default_str();
    te->add_option("--d", te_d, "feature size")->capture_default_str();
    te->add_option("--hidden", te_hidden, "MLP hidden widths")->capture_default_str();
    te->add_option("--graph", te_graph, "ffg or ufg")->capture_default_str();
    te->add_option("--steps", te_cfg.steps, "gradient steps (one fresh batch each)")
        ->capture_default_str();
    te->add_option("--batch", te_cfg.batch, "batch size")->capture_default_str();
    te->add_option("--lr", te_cfg.lr, "learning rate")->capture_default_str();
    te->add_option("--lr-final", te_cfg.lr_final,
                   "decay the learning rate geometrically to this value (0: constant)")
        ->capture_default_str();
    te->add_option("--snr-range", te_snr, "training Eb/N0 range lo:hi in dB")
        ->capture_default_str();
    te->add_option("--ckpt", te_ckpt, "checkpoint output path")->capture_default_str();
    te->add_option("--init-ckpt", te_init, "initialize parameters from this checkpoint");
    te->add_option("--ckpt-interval", te_cfg.checkpoint_interval, "extra saves every k steps");
    te->add_option("--val-interval", te_cfg.validation_interval, "validation every k steps")
        ->capture_default_str();
    te->add_option("--val-batch", te_cfg.validation_batch, "validation frames")
        ->capture_default_str();
    te->add_flag("--grad-clip", te_cfg.grad_clip, "clip gradient norm at 10");
    te->add_option("--loss-out", te_loss_out, "write the loss trace CSV here");

    // ---------------------------------------------------------------- train-jed
    auto* tj = app.add_subcommand("train-jed", "train the joint equalizer-decoder network");
    tj->configurable();
    ChannelArgs tj_ch;
    tj_ch.attach(tj);
    CodeArgs tj_code;
    tj_code.attach(tj, /*required=*/true);
    int tj_d = 16;
    std::string tj_hidden = "64,64", tj_graph = "ffg", tj_snr = "10:13";
    std::string tj_sched = "10,1", tj_ckpt = "jed.ckpt", tj_init, tj_loss_out;
    TrainConfig tj_cfg;
    tj_cfg.batch = 256;
    tj_cfg.steps = 160000;
    tj->add_option("--d", tj_d, "feature size")->capture_default_str();
    tj->add_option("--hidden", tj_hidden, "MLP hidden widths")->capture_default_str();
    tj->add_option("--graph", tj_graph, "equalizer graph: ffg or ufg")->capture_default_str();
    tj->add_option("--schedule", tj_sched,
                   "outer,inner (flooding) or outer,inner_eq,inner_dec (sequential)")
        ->capture_default_str();
    tj->add_option("--steps", tj_cfg.steps, "gradient steps")->capture_default_str();
    tj->add_option("--batch", tj_cfg.batch, "batch size")->capture_default_str();
    tj->add_option("--lr", tj_cfg.lr, "learning rate")->capture_default_str();
    tj->add_option("--lr-final", tj_cfg.lr_final,
                   "decay the learning rate geometrically to this value (0: constant)")
        ->capture_default_str();
    tj->add_option("--snr-range", tj_snr, "training Eb/N0 range lo:hi in dB")
        ->capture_default_str();
    tj->add_option("--ckpt", tj_ckpt, "checkpoint output path")->capture_default_str();
    tj->add_option("--init-ckpt", tj_init,
                   "stage-1 checkpoint to finetune (schedules are interchangeable)");
    tj->add_option("--ckpt-interval", tj_cfg.checkpoint_interval, "extra saves every k steps");
    tj->add_option("--val-interval", tj_cfg.validation_interval, "validation every k steps")
        ->capture_default_str();
    tj->add_option("--val-batch", tj_cfg.validation_batch, "validation frames")
        ->capture_default_str();
    tj->add_flag("--grad-clip", tj_cfg.grad_clip, "clip gradient norm at 10");
    tj->add_option("--loss-out", tj_loss_out, "write the loss trace CSV here");

    // ---------------------------------------------------------------- train-nbp
    auto* tn = app.add_subcommand(
        "train-nbp", "train weighted-BP baselines (nbp-ffg, nbp-ufg or duidd)");
    tn->configurable();
    ChannelArgs tn_ch;
    tn_ch.attach(tn);
    CodeArgs tn_code;
    tn_code.attach(tn, /*required=*/false);
    std::string tn_rx = "nbp-ffg", tn_snr = "10:14", tn_ckpt = "nbp.ckpt", tn_loss_out;
    int tn_n = 132, tn_iters = 5, tn_outer = 3, tn_inner_eq = 2, tn_inner_dec = 5;
    TrainConfig tn_cfg;
    tn_cfg.batch = 64;
    tn_cfg.steps = 2000;
    tn->add_option("--receiver", tn_rx, "nbp-ffg, nbp-ufg or duidd")->capture_default_str();
    tn->add_option("--n", tn_n, "block length (uncoded variants)")->capture_default_str();
    tn->add_option("--iters", tn_iters, "BP iterations (nbp variants)")->capture_default_str();
    tn->add_option("--outer", tn_outer, "duidd outer iterations")->capture_default_str();
    tn->add_option("--inner-eq", tn_inner_eq, "duidd equalizer iterations per outer")
        ->capture_default_str();
    tn->add_option("--inner-dec", tn_inner_dec, "duidd decoder iterations per outer")
        ->capture_default_str();
    tn->add_option("--steps", tn_cfg.steps, "gradient steps")->capture_default_str();
    tn->add_option("--batch", tn_cfg.batch, "batch size")->capture_default_str();
    tn->add_option("--lr", tn_cfg.lr, "learning rate")->capture_default_str();
    tn->add_option("--lr-final", tn_cfg.lr_final,
                   "decay the learning rate geometrically to this value (0: constant)")
        ->capture_default_str();
    tn->add_option("--snr-range", tn_snr, "training Eb/N0 range lo:hi in dB")
        ->capture_default_str();
    tn->add_option("--ckpt", tn_ckpt, "checkpoint output path")->capture_default_str();
    tn->add_option("--loss-out", tn_loss_out, "write the loss trace CSV here");

    // ---------------------------------------------------------------- eval
    auto* ev = app.add_subcommand("eval", "Monte-Carlo BER over an SNR grid");
    ev->configurable();
    ChannelArgs ev_ch;
    ev_ch.attach(ev);
    CodeArgs ev_code;
    ev_code.attach(ev, /*required=*/false);
    ReceiverSpec ev_spec;
    std::string ev_snr = "10:14:1", ev_sched = "10,1", ev_out = "ber.csv";
    int ev_n = 132;
    StopRule ev_stop;
    int ev_batch_frames = 64;
    ev->add_option("--receiver", ev_spec.name,
                   "bcjr, threshold, bp-ffg, bp-ufg, nbp-ffg, nbp-ufg, gnn-ffg, gnn-ufg, "
                   "turbo-bcjr-bp, disjoint-bcjr-bp, disjoint-gnn-bp, jed, duidd")
        ->required();
    ev->add_option("--n", ev_n, "block length for uncoded receivers")->capture_default_str();
    ev->add_option("--snr", ev_snr, "Eb/N0 grid lo:hi:step in dB")->capture_default_str();
    ev->add_option("--iters", ev_spec.iters, "iterations (see receiver list)")
        ->capture_default_str();
    ev->add_option("--eq-iters", ev_spec.eq_iters, "equalizer iterations (disjoint-gnn-bp)")
        ->capture_default_str();
    ev->add_option("--outer", ev_spec.outer, "outer iterations (turbo)")->capture_default_str();
    ev->add_option("--inner", ev_spec.inner, "decoder iterations per outer (turbo)")
        ->capture_default_str();
    ev->add_option("--schedule", ev_sched, "jed schedule")->capture_default_str();
    ev->add_option("--ckpt", ev_spec.checkpoint, "checkpoint for learned receivers");
    ev->add_option("--damping", ev_spec.damping, "BP message damping")->capture_default_str();
    auto* ev_approx = ev->add_flag("--approx-maxstar", "use the hard-max approximation");
    ev->add_option("--errors", ev_stop.min_errors, "stop after this many final-readout errors")
        ->capture_default_str();
    ev->add_option("--frames", ev_stop.max_frames, "frame cap per SNR point")
        ->capture_default_str();
    ev->add_option("--batch-frames", ev_batch_frames, "frames per scheduling batch")
        ->capture_default_str();
    ev->add_option("--out", ev_out, "output CSV path")->capture_default_str();

    // ---------------------------------------------------------------- sweep
    auto* sw = app.add_subcommand("sweep", "bitwise mutual information over an SNR grid");
    sw->configurable();
    ChannelArgs sw_ch;
    sw_ch.attach(sw);
    CodeArgs sw_code;
    sw_code.attach(sw, /*required=*/false);
    ReceiverSpec sw_spec;
    std::string sw_snr = "10:14:1", sw_sched = "10,1", sw_out = "bmi.csv";
    int sw_n = 132;
    long sw_min_bits = 100000;
    sw->add_option("--receiver", sw_spec.name, "receiver (as in eval)")->required();
    sw->add_option("--n", sw_n, "block length for uncoded receivers")->capture_default_str();
    sw->add_option("--snr", sw_snr, "Eb/N0 grid lo:hi:step in dB")->capture_default_str();
    sw->add_option("--iters", sw_spec.iters, "iterations")->capture_default_str();
    sw->add_option("--eq-iters", sw_spec.eq_iters, "equalizer iterations (disjoint-gnn-bp)")
        ->capture_default_str();
    sw->add_option("--outer", sw_spec.outer, "outer iterations")->capture_default_str();
    sw->add_option("--inner", sw_spec.inner, "decoder iterations per outer")
        ->capture_default_str();
    sw->add_option("--schedule", sw_sched, "jed schedule")->capture_default_str();
    sw->add_option("--ckpt", sw_spec.checkpoint, "checkpoint for learned receivers");
    sw->add_option("--min-bits", sw_min_bits, "bits collected per SNR point")
        ->capture_default_str();
    sw->add_option("--out", sw_out, "output CSV path")->capture_default_str();

    // ---------------------------------------------------------------- latency
    auto* la = app.add_subcommand("latency", "clock-cycle accounting for a receiver");
    la->configurable();
    ReceiverSpec la_spec;
    std::string la_sched = "10,1";
    int la_n = 132, la_memory = 4;
    la->add_option("--receiver", la_spec.name, "receiver kind (gnn-flood, bcjr, bp-ffg, ...)")
        ->required();
    la->add_option("--iters", la_spec.iters, "iterations")->capture_default_str();
    la->add_option("--eq-iters", la_spec.eq_iters, "equalizer iterations (composites)")
        ->capture_default_str();
    la->add_option("--outer", la_spec.outer, "outer iterations")->capture_default_str();
    la->add_option("--inner", la_spec.inner, "decoder iterations per outer")
        ->capture_default_str();
    la->add_option("--schedule", la_sched, "jed schedule")->capture_default_str();
    la->add_option("--n", la_n, "block length")->capture_default_str();
    la->add_option("--memory", la_memory, "channel memory L")->capture_default_str();

    std::vector<const char*> cargs;
    cargs.push_back("isirx");
    for (const auto& a : argv) cargs.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (te->parsed()) {
            const VecXd taps = te_ch.taps();
            const auto [te_lo, te_hi] = parse_range(te_snr);
            te_cfg.snr_lo_db = te_lo;
            te_cfg.snr_hi_db = te_hi;
            te_cfg.seed = seed;
            te_cfg.threads = threads;
            te_cfg.checkpoint_path = resolve_out(te_ckpt);
            gnn::GnnConfig gc;
            gc.d = te_d;
            gc.hidden = [&] {
                std::vector<int> h;
                std::istringstream is(te_hidden);
                std::string tok;
                while (std::getline(is, tok, ',')) h.push_back(std::stoi(tok));
                return h;
            }();
            gc.ufg = te_graph == "ufg";
            gnn::GnnParams params = gnn::make_gnn_params(gc, seed);
            if (!te_init.empty()) {
                const auto meta = nn::load_checkpoint(te_init, params.store);
                gnn::check_gnn_meta(gc, meta);
            }
            const FactorGraph g = gc.ufg ? build_ufg(te_n, static_cast<int>(taps.size()) - 1)
                                         : build_ffg(te_n, static_cast<int>(taps.size()) - 1);
            const TrainResult r = train_equalizer(te_cfg, taps, g, te_iters, params);
            write_loss_trace(resolve_out(te_loss_out), r);
            write_manifest(app, te_cfg.checkpoint_path);
            std::cout << "trained " << r.loss_trace.size() << " steps; checkpoint at "
                      << te_cfg.checkpoint_path << "\n";
            return 0;
        }
        if (tj->parsed()) {
            const VecXd taps = tj_ch.taps();
            const auto [tj_lo, tj_hi] = parse_range(tj_snr);
            tj_cfg.snr_lo_db = tj_lo;
            tj_cfg.snr_hi_db = tj_hi;
            tj_cfg.seed = seed;
            tj_cfg.threads = threads;
            tj_cfg.checkpoint_path = resolve_out(tj_ckpt);
            const LdpcCode code = tj_code.load();
            const Interleaver pi(code.n_transmitted(), tj_code.interleaver_seed);
            const int memory = static_cast<int>(taps.size()) - 1;
            const FactorGraph eq = tj_graph == "ufg"
                                       ? build_ufg(code.n_transmitted(), memory)
                                       : build_ffg(code.n_transmitted(), memory);
            const FactorGraph joint = build_joint(eq, code, pi);
            gnn::GnnConfig gc;
            gc.d = tj_d;
            gc.hidden = [&] {
                std::vector<int> h;
                std::istringstream is(tj_hidden);
                std::string tok;
                while (std::getline(is, tok, ',')) h.push_back(std::stoi(tok));
                return h;
            }();
            gc.ufg = tj_graph == "ufg";
            gc.has_check = true;
            gnn::GnnParams params = gnn::make_gnn_params(gc, seed);
            const gnn::ScheduleSpec sched = parse_schedule_arg(tj_sched);
            TrainResult r;
            if (!tj_init.empty()) {
                r = finetune_jed(tj_cfg, taps, code, pi, joint, sched, tj_init, params);
            } else {
                r = train_jed(tj_cfg, taps, code, pi, joint, sched, params);
            }
            write_loss_trace(resolve_out(tj_loss_out), r);
            write_manifest(app, tj_cfg.checkpoint_path);
            std::cout << "trained " << r.loss_trace.size() << " steps; checkpoint at "
                      << tj_cfg.checkpoint_path << "\n";
            return 0;
        }
        if (tn->parsed()) {
            const VecXd taps = tn_ch.taps();
            const auto [tn_lo, tn_hi] = parse_range(tn_snr);
            tn_cfg.snr_lo_db = tn_lo;
            tn_cfg.snr_hi_db = tn_hi;
            tn_cfg.seed = seed;
            tn_cfg.threads = threads;
            tn_cfg.checkpoint_path = resolve_out(tn_ckpt);
            const int memory = static_cast<int>(taps.size()) - 1;
            TrainResult r;
            if (tn_rx == "duidd") {
                require(!tn_code.code_path.empty(), "duidd training needs --code");
                const LdpcCode code = tn_code.load();
                const Interleaver pi(code.n_transmitted(), tn_code.interleaver_seed);
                const FactorGraph eq = build_ffg(code.n_transmitted(), memory);
                DuiddParams dp =
                    make_duidd_params(eq, code, tn_outer, tn_inner_eq, tn_inner_dec);
                r = train_duidd(tn_cfg, taps, code, pi, eq, dp);
            } else {
                require(tn_rx == "nbp-ffg" || tn_rx == "nbp-ufg",
                        "unknown train-nbp receiver: " + tn_rx);
                const FactorGraph eq = tn_rx == "nbp-ufg" ? build_ufg(tn_n, memory)
                                                          : build_ffg(tn_n, memory);
                NbpParams np = make_nbp_params(eq, tn_iters);
                r = train_nbp(tn_cfg, taps, eq, np);
            }
            write_loss_trace(resolve_out(tn_loss_out), r);
            write_manifest(app, tn_cfg.checkpoint_path);
            std::cout << "trained " << r.loss_trace.size() << " steps; checkpoint at "
                      << tn_cfg.checkpoint_path << "\n";
            return 0;
        }
        if (ev->parsed() || sw->parsed()) {
            const bool is_eval = ev->parsed();
            ReceiverSpec& spec = is_eval ? ev_spec : sw_spec;
            ChannelArgs& ch = is_eval ? ev_ch : sw_ch;
            CodeArgs& ca = is_eval ? ev_code : sw_code;
            spec.schedule = parse_schedule_arg(is_eval ? ev_sched : sw_sched);
            if (is_eval && *ev_approx) spec.exact = false;
            const VecXd taps = ch.taps();
            std::optional<LdpcCode> code;
            std::optional<Interleaver> pi;
            int n = is_eval ? ev_n : sw_n;
            if (receiver_is_coded(spec.name)) {
                require(!ca.code_path.empty(), spec.name + " needs --code");
                code.emplace(ca.load());
                pi.emplace(code->n_transmitted(), ca.interleaver_seed);
                n = code->n_transmitted();
            }
            const Receiver rx = make_receiver(spec, taps, n, code ? &*code : nullptr,
                                              pi ? &*pi : nullptr);
            const auto grid = parse_snr_grid(is_eval ? ev_snr : sw_snr);
            std::string out_path = resolve_out(is_eval ? ev_out : sw_out);
            if (is_eval) {
                const auto rows = monte_carlo(rx, taps, n, code ? &*code : nullptr,
                                              pi ? &*pi : nullptr, grid, ev_stop, seed, threads,
                                              ev_batch_frames);
                write_file(out_path, ber_csv(rows));
            } else {
                const auto rows = bmi_sweep(rx, taps, n, code ? &*code : nullptr,
                                            pi ? &*pi : nullptr, grid, sw_min_bits, seed, threads);
                write_file(out_path, bmi_csv(rows));
            }
            write_manifest(app, out_path);
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }
        if (la->parsed()) {
            la_spec.schedule = parse_schedule_arg(la_sched);
            std::cout << latency_cycles(la_spec, la_n, la_memory) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace isirx
