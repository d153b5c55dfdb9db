// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "isirx/code.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <fstream>

using namespace isirx;

namespace {
const std::string kHamming = std::string(ISIRX_TEST_DATA_DIR) + "/hamming_7_4.alist";
const std::string kBig = std::string(ISIRX_DATA_DIR) + "/ldpc_132_66.alist";
const std::string kBigPunct = std::string(ISIRX_DATA_DIR) + "/ldpc_132_66.punct";
const std::string kSmall = std::string(ISIRX_DATA_DIR) + "/ldpc_32_16.alist";

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/isirx_test_" + name;
    std::ofstream f(path);
    f << content;
    return path;
}
}  // namespace

TEST_CASE("hamming(7,4) alist loads with rank-derived info length") {
    const LdpcCode code = load_alist(kHamming);
    CHECK(code.n_code() == 7);
    CHECK(code.num_checks() == 3);
    CHECK(code.k() == 4);
    CHECK(code.n_transmitted() == 7);
    CHECK(code.nnz() == 12);
}

TEST_CASE("alist rejects malformed files") {
    // duplicate edge in a column list
    const std::string dup = write_temp("dup.alist",
                                       "2 1\n2 2\n1 1\n2\n1\n1\n1 1\n");
    CHECK_THROWS_AS(load_alist(dup), ParseError);
    // truncated
    const std::string trunc = write_temp("trunc.alist", "4 2\n2 2\n1 1 1\n");
    CHECK_THROWS_AS(load_alist(trunc), ParseError);
    // row/column lists disagree
    const std::string bad = write_temp("mismatch.alist",
                                       "2 2\n1 1\n1 1\n1 1\n1\n2\n1\n1\n");
    CHECK_THROWS_AS(load_alist(bad), ParseError);
    CHECK_THROWS_AS(load_alist("/nonexistent/file.alist"), ParseError);
}

TEST_CASE("bundled (132,66) code self-consistency") {
    const LdpcCode code = load_alist(kBig, kBigPunct);
    CHECK(code.n_transmitted() == 132);
    CHECK(code.k() == 66);
    CHECK(code.n_code() == 132 + (code.n_code() - 132));
    CHECK(code.n_code() - code.n_transmitted() == 22);  // punctured count
    CHECK(code.rate() == doctest::Approx(0.5));
    // punctured positions are exactly the masked-out ones
    int punct = 0;
    for (bool b : code.transmit_mask())
        if (!b) ++punct;
    CHECK(punct == 22);
    // rank over GF(2) equals checks (all rows independent)
    std::vector<std::vector<int>> rows;
    for (int r = 0; r < code.num_checks(); ++r) rows.push_back(code.check_neighbors(r));
    CHECK(oracle::gf2_rank(rows, code.n_code()) == code.n_code() - code.k());
}

TEST_CASE("encoding lands in the null space and is systematic") {
    const LdpcCode code = load_alist(kBig, kBigPunct);
    FrameRng rng(3, 0, 0);

    // all-zero info word -> all-zero codeword
    CHECK(code.encode(VecXi::Zero(code.k())).isZero());

    // unit vectors: generator rows satisfy the parity checks
    for (int i = 0; i < code.k(); i += 7) {
        VecXi u = VecXi::Zero(code.k());
        u[i] = 1;
        const VecXi c = code.encode(u);
        CHECK(code.syndrome(c).isZero());
        CHECK(c[code.systematic_positions()[i]] == 1);
    }

    // random words
    for (int trial = 0; trial < 1000; ++trial) {
        VecXi u(code.k());
        for (int i = 0; i < code.k(); ++i) u[i] = rng.bit();
        const VecXi c = code.encode(u);
        REQUIRE(code.syndrome(c).isZero());
        for (int i = 0; i < code.k(); ++i) REQUIRE(c[code.systematic_positions()[i]] == u[i]);
    }
}

TEST_CASE("hamming code: exhaustive null-space check") {
    const LdpcCode code = load_alist(kHamming);
    for (int w = 0; w < 16; ++w) {
        VecXi u(4);
        for (int i = 0; i < 4; ++i) u[i] = (w >> i) & 1;
        CHECK(code.encode(u).isZero() == (w == 0));
        CHECK(code.syndrome(code.encode(u)).isZero());
    }
}

TEST_CASE("small (32,16) code loads") {
    const LdpcCode code = load_alist(kSmall);
    CHECK(code.n_code() == 32);
    CHECK(code.k() == 16);
    CHECK(code.n_transmitted() == 32);
}

TEST_CASE("interleaver is a bijection with exact inverse") {
    const Interleaver id(5);
    VecXi v(5);
    v << 10, 11, 12, 13, 14;
    CHECK(id.interleave(v) == v);

    // fixed example: perm = (2,0,1) gathers [a,b,c] -> [c,a,b]
    // (constructed via a seeded permutation that we verify directly instead)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Interleaver pi(37, seed);
        VecXi w(37);
        for (int i = 0; i < 37; ++i) w[i] = 100 + i;
        const VecXi inter = pi.interleave(w);
        for (int i = 0; i < 37; ++i) CHECK(inter[i] == w[pi.perm(i)]);
        CHECK(pi.deinterleave(inter) == w);
        // bijection
        std::vector<bool> seen(37, false);
        for (int i = 0; i < 37; ++i) {
            CHECK(!seen[pi.perm(i)]);
            seen[pi.perm(i)] = true;
        }
    }
}

TEST_CASE("interleave gathers per the documented convention") {
    // out[i] = v[perm[i]]
    const Interleaver pi(3, 123);
    VecXi v(3);
    v << 7, 8, 9;
    const VecXi out = pi.interleave(v);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == v[pi.perm(i)]);
    VecXi wrong(4);
    CHECK_THROWS(pi.interleave(wrong));
}

TEST_CASE("code requires valid puncture indices") {
    CHECK_THROWS(LdpcCode({{0, 1}}, 2, {5}));
    CHECK_THROWS(LdpcCode({{0, 1}}, 2, {0, 0}));
    CHECK_THROWS(LdpcCode({{0, 0}}, 2, {}));  // duplicate edge
}
