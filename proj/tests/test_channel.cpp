// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "isirx/channel.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace isirx;

TEST_CASE("bpsk mapping convention") {
    VecXi b0(1), b1(1), b(4);
    b0 << 0;
    b1 << 1;
    b << 0, 1, 1, 0;
    CHECK(bpsk_map(b0)[0] == 1.0);
    CHECK(bpsk_map(b1)[0] == -1.0);
    VecXd expect(4);
    expect << 1, -1, -1, 1;
    CHECK(bpsk_map(b) == expect);
    VecXi bad(1);
    bad << 2;
    CHECK_THROWS(bpsk_map(bad));
}

TEST_CASE("identity channel is lossless") {
    ChannelModel m(VecXd::Ones(1), 1e-30);
    VecXd x(2);
    x << 1, -1;
    FrameRng rng(1, 2, 3);
    const VecXd y = apply_isi(m, x, rng);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("proakis-c: tap energy and all-ones output") {
    ChannelModel m = make_channel_preset("proakis-c", 1.0);
    CHECK(std::abs(m.tap_energy() - 1.0) < 1e-3);
    // all-(+1) input: every interior observation equals the tap sum
    const double tap_sum = m.taps.sum();
    CHECK(tap_sum == doctest::Approx(2.062));
    const int n = 16;
    const VecXd x = VecXd::Ones(n + 2 * m.memory);
    const VecXd y = isi_output(m, x);
    for (int k = 0; k < y.size(); ++k) CHECK(y[k] == doctest::Approx(2.062).epsilon(1e-12));
}

TEST_CASE("noiseless output equals the Toeplitz product") {
    FrameRng rng(7, 0, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int L = static_cast<int>(rng.below(4));
        const int n = 1 + static_cast<int>(rng.below(64));
        VecXd taps(L + 1);
        for (int i = 0; i <= L; ++i) taps[i] = rng.normal();
        ChannelModel m(taps, 1.0);
        VecXd x(n + 2 * L);
        for (int i = 0; i < x.size(); ++i) x[i] = rng.bit() ? 1.0 : -1.0;
        const MatXd H = toeplitz_operator(m, n);
        CHECK(H.rows() == n + L);
        CHECK(H.cols() == n + 2 * L);
        const VecXd direct = isi_output(m, x);
        const VecXd via_matrix = H * x;
        const VecXd via_oracle = oracle::convolve(taps, x);
        CHECK((direct - via_matrix).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((direct - via_oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("toeplitz shapes and small cases") {
    // memoryless: identity
    ChannelModel id(VecXd::Ones(1), 1.0);
    CHECK(toeplitz_operator(id, 2) == MatXd::Identity(2, 2));
    // L = 1 row content checked against direct convolution
    VecXd h(2);
    h << 0.3, -0.7;
    ChannelModel m(h, 1.0);
    const MatXd H = toeplitz_operator(m, 1);
    VecXd x(3);
    x << 1, -1, 1;
    CHECK(((H * x) - oracle::convolve(h, x)).cwiseAbs().maxCoeff() < 1e-15);
    // published shape: N = 132, L = 4 -> (136, 140)
    ChannelModel pc = make_channel_preset("proakis-c", 1.0);
    const MatXd Hp = toeplitz_operator(pc, 132);
    CHECK(Hp.rows() == 136);
    CHECK(Hp.cols() == 140);
}

TEST_CASE("Eb/N0 conversion") {
    CHECK(sigma_from_ebn0(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sigma_from_ebn0(3.0103, 1.0) == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(sigma_from_ebn0(10.0, 0.5) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS(sigma_from_ebn0(0.0, 0.0));
    CHECK_THROWS(sigma_from_ebn0(0.0, 1.5));
    CHECK_THROWS(sigma_from_ebn0(0.0, 1.0, -1.0));
}

TEST_CASE("noise statistics match sigma^2") {
    const double sigma2 = 0.5;
    ChannelModel m(proakis_b_taps(), sigma2);
    const int n = 256;
    const VecXd x = VecXd::Ones(n + 2 * m.memory);
    const VecXd clean = isi_output(m, x);
    double acc = 0.0;
    long count = 0;
    for (int frame = 0; frame < 4000; ++frame) {
        FrameRng rng(42, 0, frame);
        const VecXd y = apply_isi(m, x, rng);
        acc += (y - clean).squaredNorm();
        count += y.size();
    }
    CHECK(count >= 1000000);
    const double emp = acc / static_cast<double>(count);
    CHECK(std::abs(emp - sigma2) / sigma2 < 0.01);
}

TEST_CASE("frame rng is counter-addressable") {
    FrameRng a(9, 1, 5), b(9, 1, 5), c(9, 1, 6);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.normal() == b.normal());
    CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("channel model invariants") {
    CHECK_THROWS(ChannelModel(VecXd(), 1.0));
    CHECK_THROWS(ChannelModel(VecXd::Ones(1), 0.0));
    CHECK_THROWS(make_channel_preset("nonsense", 1.0));
}
