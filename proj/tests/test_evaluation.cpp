// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "isirx/evaluation.hpp"
#include "isirx/nn/loss.hpp"
#include "isirx/training.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace isirx;

namespace {
const std::string kBig = std::string(ISIRX_DATA_DIR) + "/ldpc_132_66.alist";
const std::string kBigPunct = std::string(ISIRX_DATA_DIR) + "/ldpc_132_66.punct";
}  // namespace

TEST_CASE("snr grid parsing") {
    const auto g = parse_snr_grid("10:14:1");
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 10.0);
    CHECK(g.back() == 14.0);
    CHECK(parse_snr_grid("7.5").size() == 1);
    CHECK(parse_snr_grid("0:2:0.5").size() == 5);
    CHECK_THROWS(parse_snr_grid("5:1:1"));
    CHECK_THROWS(parse_snr_grid("1:2:3:4"));
    CHECK_THROWS(parse_snr_grid("abc"));
}

TEST_CASE("latency accounting") {
    ReceiverSpec spec;
    spec.name = "gnn-flood";
    spec.iters = 12;
    CHECK(latency_cycles(spec, 132, 4) == 144);
    spec.name = "bcjr";
    CHECK(latency_cycles(spec, 132, 4) == 138);
    spec.name = "bp-ffg";
    spec.iters = 7;
    CHECK(latency_cycles(spec, 132, 4) == 14);
    spec.name = "turbo-bcjr-bp";
    spec.outer = 2;
    spec.inner = 5;
    CHECK(latency_cycles(spec, 132, 4) == 296);
    spec.name = "jed";
    spec.schedule = gnn::ScheduleSpec{10, {1}};
    CHECK(latency_cycles(spec, 132, 4) == 120);
    spec.schedule = gnn::ScheduleSpec{3, {3, 5}};
    CHECK(latency_cycles(spec, 132, 4) == 288);
    spec.name = "disjoint-gnn-bp";
    spec.eq_iters = 10;
    spec.iters = 12;
    CHECK(latency_cycles(spec, 132, 4) == 144);
    spec.name = "nonsense";
    CHECK_THROWS(latency_cycles(spec, 132, 4));
}

TEST_CASE("awgn threshold detection matches the Q function") {
    ReceiverSpec spec;
    spec.name = "threshold";
    const VecXd taps = VecXd::Ones(1);
    const Receiver rx = make_receiver(spec, taps, 128, nullptr, nullptr);
    StopRule stop;
    stop.min_errors = 150;
    stop.max_frames = 100000;
    const auto rows = monte_carlo(rx, taps, 128, nullptr, nullptr, {4.0, 6.0, 8.0}, stop, 77, 2);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        const double want = oracle::q_function(std::sqrt(2.0 * std::pow(10.0, r.snr_db / 10.0)));
        // within two standard errors of the binomial estimate
        const double se = std::sqrt(want * (1.0 - want) / static_cast<double>(r.bits_simulated));
        INFO("snr ", r.snr_db, " ber ", r.ber, " want ", want);
        CHECK(r.bit_errors >= 100);
        CHECK(std::abs(r.ber - want) < 2.0 * se + 1e-12);
    }
}

TEST_CASE("bcjr over the memoryless channel is error free without noise margin") {
    ReceiverSpec spec;
    spec.name = "bcjr";
    const VecXd taps = VecXd::Ones(1);
    const Receiver rx = make_receiver(spec, taps, 64, nullptr, nullptr);
    StopRule stop;
    stop.min_errors = 10;
    stop.max_frames = 50;
    const auto rows = monte_carlo(rx, taps, 64, nullptr, nullptr, {40.0}, stop, 78, 1);
    CHECK(rows[0].bit_errors == 0);
    CHECK(rows[0].ber == 0.0);
}

TEST_CASE("monte carlo is deterministic across worker counts") {
    ReceiverSpec spec;
    spec.name = "bp-ffg";
    spec.iters = 5;
    const VecXd taps = proakis_b_taps();
    const Receiver rx = make_receiver(spec, taps, 32, nullptr, nullptr);
    StopRule stop;
    stop.min_errors = 60;
    stop.max_frames = 3000;
    const auto a = monte_carlo(rx, taps, 32, nullptr, nullptr, {6.0, 9.0}, stop, 79, 1);
    const auto b = monte_carlo(rx, taps, 32, nullptr, nullptr, {6.0, 9.0}, stop, 79, 4);
    REQUIRE(a.size() == b.size());
    CHECK(ber_csv(a) == ber_csv(b));
    // one row per (snr, iteration) with cumulative latency
    REQUIRE(a.size() == 10);
    CHECK(a[0].iteration == 1);
    CHECK(a[4].iteration == 5);
    CHECK(a[4].latency_cycles == 10);
    // confidence note: with >= 60 errors the relative stderr is ~1/sqrt(60)
    for (const auto& r : a) {
        if (r.bit_errors >= 60) CHECK(r.ber_rel_stderr < 0.14);
    }
}

TEST_CASE("coded receivers measure info-bit error rates") {
    const LdpcCode code = load_alist(kBig, kBigPunct);
    const Interleaver pi(code.n_transmitted(), 5);
    ReceiverSpec spec;
    spec.name = "turbo-bcjr-bp";
    spec.outer = 2;
    spec.inner = 5;
    const VecXd taps = proakis_c_taps();
    const Receiver rx = make_receiver(spec, taps, code.n_transmitted(), &code, &pi);
    StopRule stop;
    stop.min_errors = 30;
    stop.max_frames = 150;
    const auto rows =
        monte_carlo(rx, taps, code.n_transmitted(), &code, &pi, {11.0}, stop, 80, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].bits_simulated == rows[0].frames * code.k());
    CHECK(rows[1].latency_cycles == 296);
    CHECK(rows[1].bit_errors <= rows[0].bit_errors);
}

TEST_CASE("bmi sweep: perfect and zero llrs, monotone for bcjr on awgn") {
    // synthetic check through the estimator itself
    const int n = 4096;
    VecXi bits(n);
    VecXd perfect(n);
    FrameRng rng(81, 0, 0);
    for (int i = 0; i < n; ++i) {
        bits[i] = rng.bit();
        perfect[i] = bits[i] == 1 ? -kLlrMax : kLlrMax;
    }
    CHECK(nn::bmi_estimate_optimized(perfect, bits).bmi == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(nn::bmi_estimate_optimized(VecXd::Zero(n), bits).bmi == doctest::Approx(0.0));

    // data-processing sanity: BCJR BMI rises with SNR on the memoryless channel
    ReceiverSpec spec;
    spec.name = "bcjr";
    const VecXd taps = VecXd::Ones(1);
    const Receiver rx = make_receiver(spec, taps, 64, nullptr, nullptr);
    const auto rows =
        bmi_sweep(rx, taps, 64, nullptr, nullptr, {-2.0, 2.0, 6.0}, 100000, 82, 2);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(r.bits >= 100000);
    CHECK(rows[0].bmi < rows[1].bmi);
    CHECK(rows[1].bmi < rows[2].bmi);
    CHECK(rows[2].bmi <= 1.0);
}

TEST_CASE("csv format is stable") {
    BerResult r;
    r.receiver = "bcjr";
    r.snr_db = 10.0;
    r.iteration = 1;
    r.latency_cycles = 138;
    r.bits_simulated = 1000;
    r.bit_errors = 10;
    r.frames = 50;
    r.frame_errors = 8;
    r.ber = 0.01;
    r.fer = 0.16;
    r.ber_rel_stderr = 0.31;
    CHECK(ber_csv({r}) ==
          "receiver,snr_db,iteration,latency_cycles,bits_simulated,bit_errors,frames,"
          "frame_errors,ber,fer,ber_rel_stderr\n"
          "bcjr,10,1,138,1000,10,50,8,0.01,0.16,0.31\n");
    BmiPoint p{"bcjr", 12.0, 100000, 0.921, 0.85};
    CHECK(bmi_csv({p}) == "receiver,snr_db,bits,bmi,alpha\nbcjr,12,100000,0.921,0.85\n");
}

TEST_CASE("receiver factory validates inputs") {
    const VecXd taps = proakis_b_taps();
    ReceiverSpec spec;
    spec.name = "jed";
    CHECK_THROWS(make_receiver(spec, taps, 32, nullptr, nullptr));  // code missing
    spec.name = "gnn-ffg";
    CHECK_THROWS(make_receiver(spec, taps, 32, nullptr, nullptr));  // checkpoint missing
    spec.name = "unknown";
    CHECK_THROWS(make_receiver(spec, taps, 32, nullptr, nullptr));
}
