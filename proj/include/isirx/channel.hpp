// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/common.hpp"
#include "isirx/rng.hpp"

namespace isirx {

/// Tapped-delay-line ISI channel y_k = sum_l h_l x_{k-l} + z_k with AWGN of
/// variance sigma2 per real dimension. Memory L = taps.size() - 1.
struct ChannelModel {
    VecXd taps;
    int memory = 0;
    double noise_variance = 1.0;

    ChannelModel(VecXd h, double sigma2) : taps(std::move(h)), noise_variance(sigma2) {
        require(taps.size() > 0, "channel taps must be non-empty");
        require(noise_variance > 0.0, "noise variance must be positive");
        require(std::isfinite(taps.squaredNorm()), "channel tap energy must be finite");
        memory = static_cast<int>(taps.size()) - 1;
    }

    double tap_energy() const { return taps.squaredNorm(); }
};

inline VecXd proakis_c_taps() {
    VecXd h(5);
    h << 0.227, 0.460, 0.688, 0.460, 0.227;
    return h;
}

inline VecXd proakis_b_taps() {
    VecXd h(3);
    h << 0.407, 0.815, 0.407;
    return h;
}

inline ChannelModel make_channel_preset(const std::string& name, double sigma2) {
    if (name == "proakis-c") {
        ChannelModel m(proakis_c_taps(), sigma2);
        require(std::abs(m.tap_energy() - 1.0) < 1e-3, "proakis-c tap energy off");
        return m;
    }
    if (name == "proakis-b") return ChannelModel(proakis_b_taps(), sigma2);
    if (name == "awgn") return ChannelModel(VecXd::Ones(1), sigma2);
    throw std::invalid_argument("unknown channel preset: " + name);
}

/// BPSK with the convention 0 -> +1, 1 -> -1 (LLRs are log P(0)/P(1)).
inline VecXd bpsk_map(const VecXi& bits) {
    VecXd s(bits.size());
    for (Eigen::Index i = 0; i < bits.size(); ++i) {
        require(bits[i] == 0 || bits[i] == 1, "bpsk_map: input must be binary");
        s[i] = bits[i] == 0 ? 1.0 : -1.0;
    }
    return s;
}

/// Value transmitted in the known guard positions at both ends of a frame.
inline constexpr double kBoundarySymbol = 1.0;

/// Extends N data symbols with L known boundary symbols on each side.
inline VecXd with_boundaries(const VecXd& data, int memory) {
    VecXd x = VecXd::Constant(data.size() + 2 * memory, kBoundarySymbol);
    x.segment(memory, data.size()) = data;
    return x;
}

/// Noiseless channel output H*x for the extended sequence x (length N + 2L);
/// returns N + L observations.
inline VecXd isi_output(const ChannelModel& model, const VecXd& x_ext) {
    const int L = model.memory;
    const auto n_obs = x_ext.size() - L;
    require(n_obs >= 1, "isi_output: sequence shorter than channel memory");
    VecXd y(n_obs);
    for (Eigen::Index k = 0; k < n_obs; ++k) {
        double acc = 0.0;
        for (int l = 0; l <= L; ++l) acc += model.taps[l] * x_ext[k + L - l];
        y[k] = acc;
    }
    return y;
}

/// Channel output with AWGN drawn from rng.
inline VecXd apply_isi(const ChannelModel& model, const VecXd& x_ext, FrameRng& rng) {
    VecXd y = isi_output(model, x_ext);
    const double sigma = std::sqrt(model.noise_variance);
    for (Eigen::Index k = 0; k < y.size(); ++k) y[k] += sigma * rng.normal();
    return y;
}

/// Banded Toeplitz operator of shape (N+L) x (N+2L):
/// H(k, j) = h_{k-j+L} for 0 <= k-j+L <= L.
inline MatXd toeplitz_operator(const ChannelModel& model, int n) {
    require(n >= 1, "toeplitz: N must be >= 1");
    const int L = model.memory;
    MatXd H = MatXd::Zero(n + L, n + 2 * L);
    for (int k = 0; k < n + L; ++k) {
        for (int j = 0; j < n + 2 * L; ++j) {
            const int l = k - j + L;
            if (l >= 0 && l <= L) H(k, j) = model.taps[l];
        }
    }
    return H;
}

/// Noise variance per real dimension from Eb/N0 in dB. With unit symbol
/// energy and code rate R: sigma^2 = Es / (2 R 10^(EbN0/10)).
inline double sigma_from_ebn0(double ebn0_db, double rate, double symbol_energy = 1.0) {
    require(rate > 0.0 && rate <= 1.0, "rate must be in (0, 1]");
    require(symbol_energy > 0.0, "symbol energy must be positive");
    return symbol_energy / (2.0 * rate * std::pow(10.0, ebn0_db / 10.0));
}

}  // namespace isirx
