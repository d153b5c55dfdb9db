// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/receivers.hpp"

#include <string>
#include <vector>

namespace isirx {

struct StopRule {
    long min_errors = 100;
    long max_frames = 10000;
};

struct BerResult {
    std::string receiver;
    double snr_db = 0.0;
    int iteration = 0;  // readout index, 1-based
    long latency_cycles = 0;
    long bits_simulated = 0;
    long bit_errors = 0;
    long frames = 0;
    long frame_errors = 0;
    double ber = 0.0;
    double fer = 0.0;
    double ber_rel_stderr = 0.0;
};

/// Monte-Carlo BER over an SNR grid; one row per (snr, readout). Coded
/// receivers measure the BER of the info bits, uncoded ones of the symbol
/// bits. The stop rule counts errors of the final readout and is checked at
/// batch granularity, so results are bit-identical for any worker count.
std::vector<BerResult> monte_carlo(const Receiver& rx, const VecXd& taps, int block_length,
                                   const LdpcCode* code, const Interleaver* pi,
                                   const std::vector<double>& snr_grid_db, const StopRule& stop,
                                   std::uint64_t seed, int threads, int batch_frames = 64);

struct BmiPoint {
    std::string receiver;
    double snr_db = 0.0;
    long bits = 0;
    double bmi = 0.0;
    double alpha = 1.0;  // damping factor that maximized the estimate
};

/// Per-SNR bitwise mutual information of the final readout, with the LLR
/// damping factor optimized per point.
std::vector<BmiPoint> bmi_sweep(const Receiver& rx, const VecXd& taps, int block_length,
                                const LdpcCode* code, const Interleaver* pi,
                                const std::vector<double>& snr_grid_db, long min_bits,
                                std::uint64_t seed, int threads, int batch_frames = 64);

/// Clock-cycle accounting: 12 cycles per message-passing iteration of the
/// neural receivers (four MLPs of three layers each), 2 per classical BP
/// iteration, N+L+2 per forward-backward equalizer invocation; composite
/// receivers sum their parts over the schedule.
long latency_cycles(const ReceiverSpec& spec, int block_length, int memory);

std::string ber_csv(const std::vector<BerResult>& rows);
std::string bmi_csv(const std::vector<BmiPoint>& rows);
void write_file(const std::string& path, const std::string& content);

/// "lo:hi:step" (inclusive) or a single value, in dB.
std::vector<double> parse_snr_grid(const std::string& text);

}  // namespace isirx
