// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/channel.hpp"
#include "isirx/code.hpp"

namespace isirx {

/// One uncoded transmission: n random bits, BPSK, boundary symbols, ISI+AWGN.
struct UncodedFrame {
    VecXi bits;      // transmitted bit labels (0 <-> +1)
    VecXd symbols;   // extended sequence incl. boundaries
    VecXd y;
};

inline UncodedFrame make_uncoded_frame(int n, const ChannelModel& model, FrameRng& rng) {
    UncodedFrame f;
    f.bits.resize(n);
    for (int i = 0; i < n; ++i) f.bits[i] = rng.bit();
    f.symbols = with_boundaries(bpsk_map(f.bits), model.memory);
    f.y = apply_isi(model, f.symbols, rng);
    return f;
}

/// One coded transmission: info bits, systematic encoding, puncturing,
/// interleaving, BPSK, ISI+AWGN. Symbol k carries transmitted code bit
/// perm(k) of the interleaver.
struct CodedFrame {
    VecXi u;         // info bits
    VecXi c;         // all code bits
    VecXi sym_bits;  // interleaved transmitted bits (per channel symbol)
    VecXd symbols;
    VecXd y;
};

inline CodedFrame make_coded_frame(const LdpcCode& code, const Interleaver& pi,
                                   const ChannelModel& model, FrameRng& rng) {
    CodedFrame f;
    f.u.resize(code.k());
    for (int i = 0; i < code.k(); ++i) f.u[i] = rng.bit();
    f.c = code.encode(f.u);
    const VecXi tx = code.restrict_to_transmitted(f.c);
    f.sym_bits = pi.interleave(tx);
    f.symbols = with_boundaries(bpsk_map(f.sym_bits), model.memory);
    f.y = apply_isi(model, f.symbols, rng);
    return f;
}

}  // namespace isirx
