// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/gnn.hpp"
#include "isirx/training.hpp"

#include <functional>
#include <string>
#include <vector>

namespace isirx {

/// Receiver selection. Field use by receiver name:
///   bcjr, threshold                 -- no extra fields
///   bp-ffg, bp-ufg                  -- iters, damping, exact
///   nbp-ffg, nbp-ufg                -- checkpoint (iterations come from it)
///   gnn-ffg, gnn-ufg                -- checkpoint, iters
///   turbo-bcjr-bp                   -- outer, inner (decoder iterations)
///   disjoint-bcjr-bp                -- iters (decoder iterations)
///   disjoint-gnn-bp                 -- checkpoint, eq_iters, iters (decoder)
///   jed                             -- checkpoint, schedule
///   duidd                           -- checkpoint (schedule comes from it)
struct ReceiverSpec {
    std::string name = "bcjr";
    int iters = 10;
    int eq_iters = 10;
    int outer = 3;
    int inner = 5;
    gnn::ScheduleSpec schedule{10, {1}};
    std::string checkpoint;
    double damping = 0.0;
    bool exact = true;
};

/// A configured receiver: maps one observation vector to per-readout LLRs in
/// its decision domain (symbol bits when uncoded, info bits when coded).
/// run() is safe to call concurrently.
struct Receiver {
    std::string name;
    bool coded = false;
    int readouts = 1;
    std::vector<long> latency;  // cumulative clock cycles at each readout
    std::function<std::vector<VecXd>(const VecXd& y, double sigma2)> run;
};

/// block_length is the number of transmitted symbols per frame (for coded
/// receivers it must equal code->n_transmitted()); it sizes graphs and the
/// sequential-equalizer latency.
Receiver make_receiver(const ReceiverSpec& spec, const VecXd& taps, int block_length,
                       const LdpcCode* code, const Interleaver* pi);

/// Loads GNN parameters with the architecture recorded in the checkpoint.
gnn::GnnParams load_gnn_params(const std::string& path);

bool receiver_is_coded(const std::string& name);

}  // namespace isirx
