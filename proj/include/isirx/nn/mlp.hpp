// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/nn/tape.hpp"
#include "isirx/rng.hpp"

#include <string>
#include <vector>

namespace isirx::nn {

/// Fully connected network applied column-wise: ReLU on hidden layers,
/// identity output. Weights live in a ParamStore.
struct Mlp {
    std::vector<Param*> weights;  // layer l: (width[l+1], width[l])
    std::vector<Param*> biases;   // layer l: (width[l+1], 1)

    int in_width() const { return static_cast<int>(weights.front()->value.cols()); }
    int out_width() const { return static_cast<int>(weights.back()->value.rows()); }

    Tensor apply(Tape& tape, const Tensor& x) const {
        require(x.rows() == in_width(), "mlp: input width mismatch");
        Tensor h = x;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            h = add_bias(matmul(tape.leaf(*weights[l]), h), tape.leaf(*biases[l]));
            if (l + 1 < weights.size()) h = relu(h);
        }
        return h;
    }
};

/// Glorot-uniform weights, zero biases. widths = {in, hidden..., out}.
inline Mlp make_mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& widths,
                    FrameRng& rng) {
    require(widths.size() >= 2, "mlp needs at least input and output widths");
    Mlp mlp;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l], fan_out = widths[l + 1];
        Param& w = store.create(prefix + ".w" + std::to_string(l), fan_out, fan_in);
        Param& b = store.create(prefix + ".b" + std::to_string(l), fan_out, 1);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < w.value.size(); ++i)
            w.value(i) = rng.uniform(-bound, bound);
        mlp.weights.push_back(&w);
        mlp.biases.push_back(&b);
    }
    return mlp;
}

}  // namespace isirx::nn
