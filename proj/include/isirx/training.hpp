// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/frames.hpp"
#include "isirx/gnn.hpp"
#include "isirx/nn/checkpoint.hpp"
#include "isirx/nn/optim.hpp"
#include "isirx/turbo.hpp"

#include <limits>
#include <optional>

namespace isirx {

/// Online-data training configuration. One step = one fresh batch = one
/// optimizer update; the per-frame SNR is uniform in [snr_lo_db, snr_hi_db].
struct TrainConfig {
    int batch = 32;
    double lr = 1e-4;
    double lr_final = 0.0;  // > 0: geometric decay from lr to lr_final
    int steps = 1000;
    double snr_lo_db = 10.0;
    double snr_hi_db = 14.0;
    std::uint64_t seed = 1;
    std::string checkpoint_path;   // empty: no checkpoints written
    int checkpoint_interval = 0;   // extra saves every k steps (0: end only)
    int validation_interval = 1000;
    int validation_batch = 64;
    bool grad_clip = false;
    double grad_clip_norm = 10.0;
    int threads = 1;

    void validate() const {
        require(batch >= 1, "batch must be >= 1");
        require(steps >= 0, "steps must be >= 0");
        require(snr_lo_db <= snr_hi_db, "SNR range is inverted");
        require(lr >= 0.0, "learning rate must be >= 0");
    }
};

struct TrainResult {
    std::vector<double> loss_trace;  // one entry per step
    std::vector<std::pair<int, double>> validation_trace;
    double best_validation = std::numeric_limits<double>::infinity();
    int best_step = -1;
};

/// Trains the equalizer network on uncoded frames (loss over the transmitted
/// bit labels, averaged over all per-iteration readouts).
TrainResult train_equalizer(const TrainConfig& cfg, const VecXd& taps,
                            const FactorGraph& eq_graph, int n_iters, gnn::GnnParams& params);

/// Trains the joint receiver on coded frames; the loss covers every code-bit
/// VN including punctured ones, averaged over every readout of the schedule.
TrainResult train_jed(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                      const Interleaver& pi, const FactorGraph& joint_graph,
                      const gnn::ScheduleSpec& schedule, gnn::GnnParams& params);

/// Loads a checkpoint and continues training under a (typically longer)
/// schedule; weight sharing over iterations makes schedules interchangeable.
TrainResult finetune_jed(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                         const Interleaver& pi, const FactorGraph& joint_graph,
                         const gnn::ScheduleSpec& stage2, const std::string& stage1_checkpoint,
                         gnn::GnnParams& params);

/// Per-edge-per-iteration multiplicative weights for the neural-BP equalizer.
struct NbpParams {
    nn::ParamStore store;
    nn::Param* weights = nullptr;  // (iters, edges), initialized to 1
    int iters = 0;

    std::map<std::string, std::string> meta(const FactorGraph& g) const;
};
NbpParams make_nbp_params(const FactorGraph& eq_graph, int iters);

TrainResult train_nbp(const TrainConfig& cfg, const VecXd& taps, const FactorGraph& eq_graph,
                      NbpParams& params, bool exact = true);

/// Weighted-BP equalizer + BP decoder with trainable scalars on the
/// component handoffs.
struct DuiddParams {
    nn::ParamStore store;
    nn::Param* nbp = nullptr;      // (outer * inner_eq, edges), init 1
    nn::Param* eq_to_dec = nullptr;  // (outer, n_sym), init 1
    nn::Param* dec_to_eq = nullptr;  // (outer, n_sym), init 1
    int outer = 0, inner_eq = 0, inner_dec = 0;

    std::map<std::string, std::string> meta(const FactorGraph& g) const;
    DuiddWeights<double> weights_view() const;
};
DuiddParams make_duidd_params(const FactorGraph& eq_graph, const LdpcCode& code, int outer,
                              int inner_eq, int inner_dec);

TrainResult train_duidd(const TrainConfig& cfg, const VecXd& taps, const LdpcCode& code,
                        const Interleaver& pi, const FactorGraph& eq_graph, DuiddParams& params);

}  // namespace isirx
