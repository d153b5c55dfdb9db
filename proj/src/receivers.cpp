// SPDX-License-Identifier: Apache-2.0
#include "isirx/receivers.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace isirx {

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

VecXd info_llrs(const VecXd& code_llr, const LdpcCode& code) {
    VecXd u(code.k());
    for (int i = 0; i < code.k(); ++i) u[i] = code_llr[code.systematic_positions()[i]];
    return u;
}

long latency_bcjr(int n, int memory) { return n + memory + 2; }

}  // namespace

gnn::GnnParams load_gnn_params(const std::string& path) {
    const auto meta = nn::read_checkpoint_meta(path);
    gnn::GnnConfig cfg;
    auto need = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw ParseError("checkpoint misses meta key " + key);
        return it->second;
    };
    cfg.d = std::stoi(need("feature_size"));
    cfg.hidden = parse_int_list(need("hidden"));
    cfg.ufg = need("graph") == "ufg";
    cfg.has_check = need("kind") == "gnn-jed";
    gnn::GnnParams params = gnn::make_gnn_params(cfg, /*seed=*/0);
    nn::load_checkpoint(path, params.store);
    return params;
}

bool receiver_is_coded(const std::string& name) {
    return name == "turbo-bcjr-bp" || name == "disjoint-bcjr-bp" || name == "disjoint-gnn-bp" ||
           name == "jed" || name == "duidd";
}

Receiver make_receiver(const ReceiverSpec& spec, const VecXd& taps, int block_length,
                       const LdpcCode* code, const Interleaver* pi) {
    Receiver rx;
    rx.name = spec.name;
    rx.coded = receiver_is_coded(spec.name);
    if (rx.coded) {
        require(code != nullptr && pi != nullptr, spec.name + " needs a code");
        require(block_length == code->n_transmitted(),
                "block length must match the number of transmitted code bits");
    }
    const int memory = static_cast<int>(taps.size()) - 1;
    const int n_sym = block_length;

    if (spec.name == "bcjr") {
        auto trellis = std::make_shared<Trellis>(ChannelModel(taps, 1.0));
        const bool exact = spec.exact;
        rx.readouts = 1;
        rx.latency = {latency_bcjr(n_sym, memory)};
        rx.run = [trellis, exact](const VecXd& y, double sigma2) {
            return std::vector<VecXd>{bcjr_equalize(*trellis, y, sigma2, VecXd(), exact).app};
        };
        return rx;
    }
    if (spec.name == "threshold") {
        const double h0 = taps[0];
        rx.readouts = 1;
        rx.latency = {1};
        rx.run = [h0, memory](const VecXd& y, double sigma2) {
            const Eigen::Index n = y.size() - memory;
            VecXd llr(n);
            for (Eigen::Index k = 0; k < n; ++k) llr[k] = clip_llr(2.0 * h0 * y[k] / sigma2);
            return std::vector<VecXd>{llr};
        };
        return rx;
    }
    if (spec.name == "bp-ffg" || spec.name == "bp-ufg" || spec.name == "nbp-ffg" ||
        spec.name == "nbp-ufg") {
        const bool ufg = spec.name.ends_with("ufg");
        const bool neural = spec.name.starts_with("nbp");
        rx.readouts = spec.iters;
        int iters = spec.iters;
        std::shared_ptr<MatXd> weights;
        if (neural) {
            require(!spec.checkpoint.empty(), "nbp receiver needs a checkpoint");
            auto store = std::make_shared<nn::ParamStore>();
            const auto meta = nn::read_checkpoint_meta(spec.checkpoint);
            iters = std::stoi(meta.at("iters"));
            const int n_edges = std::stoi(meta.at("num_edges"));
            nn::Param& w = store->create("nbp.weights", iters, n_edges);
            nn::load_checkpoint(spec.checkpoint, *store);
            weights = std::make_shared<MatXd>(w.value);
            rx.readouts = iters;
        }
        rx.latency.clear();
        for (int t = 1; t <= rx.readouts; ++t) rx.latency.push_back(2L * t);
        const double damping = spec.damping;
        const bool exact = spec.exact;
        // graphs depend on the frame length; cache per length
        auto cache = std::make_shared<std::map<int, FactorGraph>>();
        auto mutex = std::make_shared<std::mutex>();
        rx.run = [taps, ufg, iters, damping, exact, weights, cache, mutex, memory](
                     const VecXd& y, double sigma2) {
            const int n = static_cast<int>(y.size()) - memory;
            const FactorGraph* g;
            {
                std::lock_guard<std::mutex> lock(*mutex);
                auto it = cache->find(n);
                if (it == cache->end())
                    it = cache->emplace(n, ufg ? build_ufg(n, memory) : build_ffg(n, memory)).first;
                g = &it->second;
            }
            const ChannelModel m(taps, sigma2);
            if (!weights) return bp_equalize(*g, m, y, VecXd(), iters, damping, exact);
            return nbp_equalize(*g, m, y, VecXd(), iters, *weights, damping, exact);
        };
        return rx;
    }
    if (spec.name == "gnn-ffg" || spec.name == "gnn-ufg") {
        require(!spec.checkpoint.empty(), "gnn receiver needs a checkpoint");
        auto params = std::make_shared<gnn::GnnParams>(load_gnn_params(spec.checkpoint));
        const bool ufg = spec.name.ends_with("ufg");
        require(params->config.ufg == ufg, "checkpoint was trained for the other graph family");
        require(!params->config.has_check, "checkpoint belongs to a joint receiver");
        const int iters = spec.iters;
        rx.readouts = iters;
        rx.latency.clear();
        for (int t = 1; t <= iters; ++t) rx.latency.push_back(12L * t);
        auto cache = std::make_shared<std::map<int, gnn::GnnIndex>>();
        auto mutex = std::make_shared<std::mutex>();
        rx.run = [taps, params, ufg, iters, cache, mutex, memory](const VecXd& y, double sigma2) {
            const int n = static_cast<int>(y.size()) - memory;
            const gnn::GnnIndex* idx;
            {
                std::lock_guard<std::mutex> lock(*mutex);
                auto it = cache->find(n);
                if (it == cache->end()) {
                    const FactorGraph g = ufg ? build_ufg(n, memory) : build_ffg(n, memory);
                    it = cache->emplace(n, gnn::build_gnn_index(g)).first;
                }
                idx = &it->second;
            }
            const ChannelModel m(taps, sigma2);
            return gnn::run_equalizer_llrs(*idx, *params, gnn::make_gnn_inputs(*idx, m, y), iters);
        };
        return rx;
    }
    if (spec.name == "turbo-bcjr-bp") {
        auto trellis = std::make_shared<Trellis>(ChannelModel(taps, 1.0));
        const int outer = spec.outer, inner = spec.inner;
        const bool exact = spec.exact;
        rx.readouts = outer;
        rx.latency.clear();
        for (int o = 1; o <= outer; ++o)
            rx.latency.push_back(o * (latency_bcjr(n_sym, memory) + 2L * inner));
        const LdpcCode* c = code;
        const Interleaver* p = pi;
        rx.run = [trellis, c, p, outer, inner, exact](const VecXd& y, double sigma2) {
            const auto its = turbo_bcjr_bp(*trellis, *c, *p, y, sigma2, outer, inner, exact);
            std::vector<VecXd> out;
            out.reserve(its.size());
            for (const auto& it : its) out.push_back(info_llrs(it.code_llr, *c));
            return out;
        };
        return rx;
    }
    if (spec.name == "disjoint-bcjr-bp") {
        auto trellis = std::make_shared<Trellis>(ChannelModel(taps, 1.0));
        const int dec_iters = spec.iters;
        const bool exact = spec.exact;
        rx.readouts = dec_iters;
        rx.latency.clear();
        for (int t = 1; t <= dec_iters; ++t)
            rx.latency.push_back(latency_bcjr(n_sym, memory) + 2L * t);
        const LdpcCode* c = code;
        const Interleaver* p = pi;
        rx.run = [trellis, c, p, dec_iters, exact](const VecXd& y, double sigma2) {
            const BcjrResult eq = bcjr_equalize(*trellis, y, sigma2, VecXd(), exact);
            std::vector<double> ext(eq.extrinsic.data(), eq.extrinsic.data() + eq.extrinsic.size());
            const auto ch = symbols_to_code(ext, *c, *p);
            const auto dec =
                ldpc_bp_decode(*c, Eigen::Map<const VecXd>(ch.data(), c->n_code()), dec_iters);
            std::vector<VecXd> out;
            out.reserve(dec.size());
            for (const auto& it : dec) out.push_back(info_llrs(it.llr, *c));
            return out;
        };
        return rx;
    }
    if (spec.name == "disjoint-gnn-bp") {
        require(!spec.checkpoint.empty(), "disjoint-gnn-bp needs an equalizer checkpoint");
        auto params = std::make_shared<gnn::GnnParams>(load_gnn_params(spec.checkpoint));
        require(!params->config.has_check, "disjoint-gnn-bp expects an equalizer checkpoint");
        const int eq_iters = spec.eq_iters, dec_iters = spec.iters;
        rx.readouts = dec_iters;
        rx.latency.clear();
        for (int t = 1; t <= dec_iters; ++t) rx.latency.push_back(12L * eq_iters + 2L * t);
        const LdpcCode* c = code;
        const Interleaver* p = pi;
        const bool ufg = params->config.ufg;
        auto idx = std::make_shared<gnn::GnnIndex>(gnn::build_gnn_index(
            ufg ? build_ufg(n_sym, memory) : build_ffg(n_sym, memory)));
        rx.run = [taps, params, idx, c, p, eq_iters, dec_iters](const VecXd& y, double sigma2) {
            const ChannelModel m(taps, sigma2);
            const auto llrs =
                gnn::run_equalizer_llrs(*idx, *params, gnn::make_gnn_inputs(*idx, m, y), eq_iters);
            std::vector<double> sym(llrs.back().data(), llrs.back().data() + llrs.back().size());
            const auto ch = symbols_to_code(sym, *c, *p);
            const auto dec =
                ldpc_bp_decode(*c, Eigen::Map<const VecXd>(ch.data(), c->n_code()), dec_iters);
            std::vector<VecXd> out;
            out.reserve(dec.size());
            for (const auto& it : dec) out.push_back(info_llrs(it.llr, *c));
            return out;
        };
        return rx;
    }
    if (spec.name == "jed") {
        require(!spec.checkpoint.empty(), "jed needs a checkpoint");
        auto params = std::make_shared<gnn::GnnParams>(load_gnn_params(spec.checkpoint));
        require(params->config.has_check, "jed expects a joint-receiver checkpoint");
        const gnn::ScheduleSpec schedule = spec.schedule;
        schedule.validate();
        rx.readouts = schedule.total_readouts();
        rx.latency.clear();
        for (int r = 1; r <= rx.readouts; ++r) rx.latency.push_back(12L * r);
        const LdpcCode* c = code;
        auto joint = std::make_shared<FactorGraph>(build_joint(
            params->config.ufg ? build_ufg(n_sym, memory) : build_ffg(n_sym, memory), *code, *pi));
        auto idx = std::make_shared<gnn::GnnIndex>(gnn::build_gnn_index(*joint));
        rx.run = [taps, params, idx, c, schedule](const VecXd& y, double sigma2) {
            const ChannelModel m(taps, sigma2);
            const auto llrs =
                gnn::run_jed_llrs(*idx, *params, gnn::make_gnn_inputs(*idx, m, y), schedule);
            std::vector<VecXd> out;
            out.reserve(llrs.size());
            for (const auto& l : llrs) out.push_back(info_llrs(l, *c));
            return out;
        };
        return rx;
    }
    if (spec.name == "duidd") {
        require(!spec.checkpoint.empty(), "duidd needs a checkpoint");
        const auto meta = nn::read_checkpoint_meta(spec.checkpoint);
        const int outer = std::stoi(meta.at("outer"));
        const int inner_eq = std::stoi(meta.at("inner_eq"));
        const int inner_dec = std::stoi(meta.at("inner_dec"));
        const FactorGraph eq_graph = meta.at("graph") == "ufg" ? build_ufg(n_sym, memory)
                                                               : build_ffg(n_sym, memory);
        auto dp = std::make_shared<DuiddParams>(
            make_duidd_params(eq_graph, *code, outer, inner_eq, inner_dec));
        nn::load_checkpoint(spec.checkpoint, dp->store);
        auto graph = std::make_shared<FactorGraph>(eq_graph);
        auto weights = std::make_shared<DuiddWeights<double>>(dp->weights_view());
        rx.readouts = outer;
        rx.latency.clear();
        for (int o = 1; o <= outer; ++o) rx.latency.push_back(o * (2L * inner_eq + 2L * inner_dec));
        const LdpcCode* c = code;
        const Interleaver* p = pi;
        rx.run = [taps, graph, weights, c, p, outer, inner_eq, inner_dec](const VecXd& y,
                                                                          double sigma2) {
            const ChannelModel m(taps, sigma2);
            const auto per_outer = duidd_forward<double>(*graph, m, y, *c, *p, outer, inner_eq,
                                                         inner_dec, *weights);
            std::vector<VecXd> out;
            out.reserve(per_outer.size());
            for (const auto& llr : per_outer) {
                const VecXd v = Eigen::Map<const VecXd>(llr.data(), c->n_code());
                out.push_back(info_llrs(v, *c));
            }
            return out;
        };
        return rx;
    }
    throw std::invalid_argument("unknown receiver: " + spec.name);
}

}  // namespace isirx
