// SPDX-License-Identifier: Apache-2.0
#include "isirx/evaluation.hpp"

#include "isirx/nn/loss.hpp"
#include "isirx/parallel.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace isirx {

namespace {

constexpr std::uint64_t kStreamEval = 0x4556414c;

struct FrameCounts {
    std::vector<long> errors;  // per readout
    bool frame_error = false;
    // BMI collection (final readout)
    std::vector<double> llrs;
    std::vector<int> bits;
};

FrameCounts run_frame(const Receiver& rx, const VecXd& taps, int block_length,
                      const LdpcCode* code, const Interleaver* pi, double sigma2,
                      std::uint64_t seed, std::uint64_t stream, std::uint64_t frame_idx,
                      bool collect_llrs) {
    FrameRng rng(seed, stream, frame_idx);
    const ChannelModel model(taps, sigma2);
    VecXi truth;
    VecXd y;
    if (rx.coded) {
        const CodedFrame fr = make_coded_frame(*code, *pi, model, rng);
        truth = fr.u;
        y = fr.y;
    } else {
        const UncodedFrame fr = make_uncoded_frame(block_length, model, rng);
        truth = fr.bits;
        y = fr.y;
    }
    const auto outs = rx.run(y, sigma2);
    FrameCounts fc;
    fc.errors.assign(outs.size(), 0);
    for (std::size_t r = 0; r < outs.size(); ++r) {
        const VecXd& llr = outs[r];
        require(llr.size() == truth.size(), "receiver output length mismatch");
        for (Eigen::Index i = 0; i < llr.size(); ++i) {
            const int hat = llr[i] < 0.0 ? 1 : 0;
            if (hat != truth[i]) ++fc.errors[r];
        }
    }
    fc.frame_error = fc.errors.back() > 0;
    if (collect_llrs) {
        const VecXd& llr = outs.back();
        fc.llrs.assign(llr.data(), llr.data() + llr.size());
        fc.bits.resize(truth.size());
        for (Eigen::Index i = 0; i < truth.size(); ++i) fc.bits[static_cast<std::size_t>(i)] = truth[i];
    }
    return fc;
}

}  // namespace

std::vector<BerResult> monte_carlo(const Receiver& rx, const VecXd& taps, int block_length,
                                   const LdpcCode* code, const Interleaver* pi,
                                   const std::vector<double>& snr_grid_db, const StopRule& stop,
                                   std::uint64_t seed, int threads, int batch_frames) {
    require(stop.min_errors >= 1 && stop.max_frames >= 1, "bad stop rule");
    const double rate = rx.coded ? code->rate() : 1.0;
    const long bits_per_frame = rx.coded ? code->k() : block_length;
    std::vector<BerResult> rows;

    for (std::size_t s = 0; s < snr_grid_db.size(); ++s) {
        const double snr = snr_grid_db[s];
        const double sigma2 = sigma_from_ebn0(snr, rate);
        const std::uint64_t stream = kStreamEval ^ (static_cast<std::uint64_t>(s) << 20);

        std::vector<long> errors(rx.readouts, 0);
        long frames = 0, frame_errors = 0;
        while (frames < stop.max_frames && errors[rx.readouts - 1] < stop.min_errors) {
            const int batch = static_cast<int>(
                std::min<long>(batch_frames, stop.max_frames - frames));
            std::function<FrameCounts(int)> one = [&](int f) {
                return run_frame(rx, taps, block_length, code, pi, sigma2, seed, stream,
                                 static_cast<std::uint64_t>(frames + f), false);
            };
            const auto counts = parallel_map<FrameCounts>(batch, threads, one);
            for (const auto& fc : counts) {
                for (int r = 0; r < rx.readouts; ++r) errors[r] += fc.errors[r];
                frame_errors += fc.frame_error ? 1 : 0;
            }
            frames += batch;
        }

        for (int r = 0; r < rx.readouts; ++r) {
            BerResult row;
            row.receiver = rx.name;
            row.snr_db = snr;
            row.iteration = r + 1;
            row.latency_cycles = rx.latency[static_cast<std::size_t>(r)];
            row.bits_simulated = frames * bits_per_frame;
            row.bit_errors = errors[r];
            row.frames = frames;
            row.frame_errors = frame_errors;
            row.ber = static_cast<double>(errors[r]) / static_cast<double>(row.bits_simulated);
            row.fer = static_cast<double>(frame_errors) / static_cast<double>(frames);
            row.ber_rel_stderr =
                errors[r] > 0 ? std::sqrt((1.0 - row.ber) / static_cast<double>(errors[r])) : 1.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<BmiPoint> bmi_sweep(const Receiver& rx, const VecXd& taps, int block_length,
                                const LdpcCode* code, const Interleaver* pi,
                                const std::vector<double>& snr_grid_db, long min_bits,
                                std::uint64_t seed, int threads, int batch_frames) {
    std::vector<BmiPoint> rows;
    const double rate = rx.coded ? code->rate() : 1.0;
    for (std::size_t s = 0; s < snr_grid_db.size(); ++s) {
        const double snr = snr_grid_db[s];
        const double sigma2 = sigma_from_ebn0(snr, rate);
        const std::uint64_t stream = kStreamEval ^ 0xB3 ^ (static_cast<std::uint64_t>(s) << 20);
        std::vector<double> llrs;
        std::vector<int> bits;
        long frames = 0;
        while (static_cast<long>(bits.size()) < min_bits) {
            std::function<FrameCounts(int)> one = [&](int f) {
                return run_frame(rx, taps, block_length, code, pi, sigma2, seed, stream,
                                 static_cast<std::uint64_t>(frames + f), true);
            };
            const auto counts = parallel_map<FrameCounts>(batch_frames, threads, one);
            for (const auto& fc : counts) {  // frame order
                llrs.insert(llrs.end(), fc.llrs.begin(), fc.llrs.end());
                bits.insert(bits.end(), fc.bits.begin(), fc.bits.end());
            }
            frames += batch_frames;
        }
        const VecXd l = Eigen::Map<const VecXd>(llrs.data(), static_cast<Eigen::Index>(llrs.size()));
        VecXi b(static_cast<Eigen::Index>(bits.size()));
        for (std::size_t i = 0; i < bits.size(); ++i) b[static_cast<Eigen::Index>(i)] = bits[i];
        const nn::BmiResult r = nn::bmi_estimate_optimized(l, b);
        rows.push_back({rx.name, snr, static_cast<long>(bits.size()), r.bmi, r.alpha});
    }
    return rows;
}

long latency_cycles(const ReceiverSpec& spec, int block_length, int memory) {
    const long bcjr = block_length + memory + 2;
    const std::string& n = spec.name;
    if (n == "bcjr") return bcjr;
    if (n == "threshold") return 1;
    if (n == "bp-ffg" || n == "bp-ufg" || n == "nbp-ffg" || n == "nbp-ufg" || n == "ldpc-bp")
        return 2L * spec.iters;
    if (n == "gnn-ffg" || n == "gnn-ufg" || n == "gnn-flood" || n == "gnn")
        return 12L * spec.iters;
    if (n == "jed") {
        spec.schedule.validate();
        return 12L * spec.schedule.total_readouts();
    }
    if (n == "turbo-bcjr-bp") return spec.outer * (bcjr + 2L * spec.inner);
    if (n == "disjoint-bcjr-bp") return bcjr + 2L * spec.iters;
    if (n == "disjoint-gnn-bp") return 12L * spec.eq_iters + 2L * spec.iters;
    if (n == "duidd") return spec.outer * (2L * spec.eq_iters + 2L * spec.inner);
    throw std::invalid_argument("unknown receiver for latency accounting: " + n);
}

namespace {
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}
}  // namespace

std::string ber_csv(const std::vector<BerResult>& rows) {
    std::string out =
        "receiver,snr_db,iteration,latency_cycles,bits_simulated,bit_errors,frames,"
        "frame_errors,ber,fer,ber_rel_stderr\n";
    for (const auto& r : rows) {
        out += r.receiver + "," + fmt_double(r.snr_db) + "," + std::to_string(r.iteration) + "," +
               std::to_string(r.latency_cycles) + "," + std::to_string(r.bits_simulated) + "," +
               std::to_string(r.bit_errors) + "," + std::to_string(r.frames) + "," +
               std::to_string(r.frame_errors) + "," + fmt_double(r.ber) + "," + fmt_double(r.fer) +
               "," + fmt_double(r.ber_rel_stderr) + "\n";
    }
    return out;
}

std::string bmi_csv(const std::vector<BmiPoint>& rows) {
    std::string out = "receiver,snr_db,bits,bmi,alpha\n";
    for (const auto& r : rows) {
        out += r.receiver + "," + fmt_double(r.snr_db) + "," + std::to_string(r.bits) + "," +
               fmt_double(r.bmi) + "," + fmt_double(r.alpha) + "\n";
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot write file: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<double> parse_snr_grid(const std::string& text) {
    std::vector<double> vals;
    std::vector<std::string> parts;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ':')) parts.push_back(tok);
    try {
        if (parts.size() == 1) {
            vals.push_back(std::stod(parts[0]));
        } else if (parts.size() == 3) {
            const double lo = std::stod(parts[0]), hi = std::stod(parts[1]),
                         step = std::stod(parts[2]);
            require(step > 0.0 && hi >= lo, "bad SNR grid: " + text);
            for (double v = lo; v <= hi + 1e-9; v += step) vals.push_back(v);
        } else {
            throw ParseError("bad SNR grid: " + text);
        }
    } catch (const std::invalid_argument&) {
        throw ParseError("bad SNR grid: " + text);
    }
    return vals;
}

}  // namespace isirx
