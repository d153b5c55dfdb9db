// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/bcjr.hpp"
#include "isirx/bp.hpp"
#include "isirx/ldpc_decode.hpp"

namespace isirx {

/// Scatters symbol-domain LLRs into code positions through the interleaver
/// (punctured positions get zero); companion gather goes the other way.
template <class S>
std::vector<S> symbols_to_code(const std::vector<S>& sym_llr, const LdpcCode& code,
                               const Interleaver& pi) {
    require(static_cast<int>(sym_llr.size()) == pi.size(), "symbols_to_code: length mismatch");
    std::vector<S> out(code.n_code(), S(0.0));
    for (int k = 0; k < pi.size(); ++k)
        out[code.transmitted_positions()[pi.perm(k)]] = sym_llr[k];
    return out;
}

template <class S>
std::vector<S> code_to_symbols(const std::vector<S>& code_llr, const LdpcCode& code,
                               const Interleaver& pi) {
    require(static_cast<int>(code_llr.size()) == code.n_code(), "code_to_symbols: length mismatch");
    std::vector<S> out(pi.size());
    for (int k = 0; k < pi.size(); ++k)
        out[k] = code_llr[code.transmitted_positions()[pi.perm(k)]];
    return out;
}

struct TurboIterate {
    VecXd code_llr;  // decoder posterior on all code positions
    VecXi u_hat;     // hard decisions on the info positions
    bool syndrome_ok = false;
};

/// Iterative equalization and decoding: log-MAP equalizer and BP decoder
/// exchanging extrinsic information. outer = 1 is plain disjoint processing.
inline std::vector<TurboIterate> turbo_bcjr_bp(const Trellis& trellis, const LdpcCode& code,
                                               const Interleaver& pi, const VecXd& y,
                                               double sigma2, int outer, int inner_bp,
                                               bool exact = true) {
    require(outer >= 1 && inner_bp >= 1, "turbo: degenerate schedule");
    const int n_sym = code.n_transmitted();
    std::vector<double> apriori_sym(n_sym, 0.0);
    std::vector<TurboIterate> out;
    out.reserve(outer);
    VecXd apriori = VecXd::Zero(n_sym);
    for (int o = 0; o < outer; ++o) {
        for (int k = 0; k < n_sym; ++k) apriori[k] = apriori_sym[k];
        const BcjrResult eq = bcjr_equalize(trellis, y, sigma2, apriori, exact);
        std::vector<double> ext_sym(eq.extrinsic.data(), eq.extrinsic.data() + n_sym);
        const std::vector<double> ch_llr = symbols_to_code(ext_sym, code, pi);
        const VecXd ch = Eigen::Map<const VecXd>(ch_llr.data(), code.n_code());
        const auto dec = ldpc_bp_decode(code, ch, inner_bp, /*sum_product=*/true);
        const auto& last = dec.back();

        std::vector<double> dec_ext(code.n_code());
        for (int c = 0; c < code.n_code(); ++c)
            dec_ext[c] = clip(last.llr[c] - ch_llr[c], -kLlrMax, kLlrMax);
        apriori_sym = code_to_symbols(dec_ext, code, pi);

        TurboIterate it;
        it.code_llr = last.llr;
        it.u_hat.resize(code.k());
        for (int i = 0; i < code.k(); ++i)
            it.u_hat[i] = last.hard[code.systematic_positions()[i]];
        it.syndrome_ok = last.syndrome_ok;
        out.push_back(std::move(it));
    }
    return out;
}

/// Deep-unfolded iterative receiver: weighted-BP equalizer and BP decoder
/// with a trainable scalar on every handoff between the components.
/// Weights: nbp[(o * inner_eq + t)][edge], handoff (outer, n_sym) each way.
template <class S>
struct DuiddWeights {
    EdgeWeights<S> nbp;                        // (outer * inner_eq) x num_edges
    std::vector<std::vector<S>> eq_to_dec;     // outer x n_sym
    std::vector<std::vector<S>> dec_to_eq;     // outer x n_sym
};

/// Returns the decoder posterior over all code bits after every outer
/// iteration. Differentiable end to end for S = rad::Var.
template <class S>
std::vector<std::vector<S>> duidd_forward(const FactorGraph& eq_graph, const ChannelModel& model,
                                          const VecXd& y, const LdpcCode& code,
                                          const Interleaver& pi, int outer, int inner_eq,
                                          int inner_dec, const DuiddWeights<S>& w,
                                          bool exact = true) {
    require(outer >= 1 && inner_eq >= 1 && inner_dec >= 1, "duidd: degenerate schedule");
    const int n_sym = code.n_transmitted();
    require(eq_graph.num_vn == n_sym, "duidd: graph/code size mismatch");

    std::vector<S> apriori_sym(n_sym, S(0.0));
    std::vector<std::vector<S>> per_outer;
    per_outer.reserve(outer);
    for (int o = 0; o < outer; ++o) {
        EdgeWeights<S> stage(w.nbp.begin() + o * inner_eq,
                             w.nbp.begin() + (o + 1) * inner_eq);
        auto eq_iters =
            bp_equalize_t<S>(eq_graph, model, y, apriori_sym, inner_eq, 0.0, &stage, exact);
        std::vector<S>& app_sym = eq_iters.back();

        std::vector<S> ext_sym(n_sym);
        for (int k = 0; k < n_sym; ++k)
            ext_sym[k] = clip(app_sym[k] - apriori_sym[k], -kLlrMax, kLlrMax) * w.eq_to_dec[o][k];
        const std::vector<S> ch_llr = symbols_to_code(ext_sym, code, pi);
        auto dec =
            ldpc_bp_decode_t<S>(code, ch_llr, inner_dec, /*sum_product=*/true, /*early_exit=*/false);
        auto& last = dec.back();

        std::vector<S> dec_ext(code.n_code());
        for (int c = 0; c < code.n_code(); ++c)
            dec_ext[c] = clip(last.llr[c] - ch_llr[c], -kLlrMax, kLlrMax);
        std::vector<S> fed = code_to_symbols(dec_ext, code, pi);
        for (int k = 0; k < n_sym; ++k) apriori_sym[k] = fed[k] * w.dec_to_eq[o][k];

        per_outer.push_back(std::move(last.llr));
    }
    return per_outer;
}

}  // namespace isirx
