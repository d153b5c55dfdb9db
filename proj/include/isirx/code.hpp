// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/common.hpp"
#include "isirx/rng.hpp"

#include <string>
#include <vector>

namespace isirx {

/// Binary LDPC code defined by its parity-check matrix. Positions with
/// transmit_mask = false are punctured: they live in the Tanner graph and in
/// the loss, but never reach the channel.
class LdpcCode {
  public:
    /// Builds from a dense 0/1 parity-check matrix (rows = checks).
    /// punctured lists 0-based column indices that are not transmitted.
    LdpcCode(std::vector<std::vector<int>> rows, int n_code,
             std::vector<int> punctured = {});

    int n_code() const { return n_code_; }
    int k() const { return k_; }
    int num_checks() const { return static_cast<int>(rows_.size()); }
    int n_transmitted() const { return n_transmitted_; }
    int nnz() const { return nnz_; }
    double rate() const { return static_cast<double>(k_) / n_transmitted_; }

    const std::vector<int>& check_neighbors(int row) const { return rows_[row]; }
    const std::vector<bool>& transmit_mask() const { return transmit_mask_; }
    const std::vector<int>& transmitted_positions() const { return transmitted_positions_; }
    const std::vector<int>& systematic_positions() const { return systematic_positions_; }

    /// Systematic encoding: c[systematic_positions] = u and H c = 0 (mod 2).
    VecXi encode(const VecXi& info_bits) const;

    /// H c mod 2; all-zero iff c is a codeword.
    VecXi syndrome(const VecXi& code_bits) const;
    bool is_codeword(const VecXi& code_bits) const { return syndrome(code_bits).isZero(); }

    /// Keeps transmitted positions, in increasing column order.
    VecXi restrict_to_transmitted(const VecXi& code_bits) const;

  private:
    std::vector<std::vector<int>> rows_;  // per check: sorted column indices
    int n_code_ = 0;
    int k_ = 0;
    int n_transmitted_ = 0;
    int nnz_ = 0;
    std::vector<bool> transmit_mask_;
    std::vector<int> transmitted_positions_;
    std::vector<int> systematic_positions_;  // free columns of the GF(2) RREF
    std::vector<int> pivot_positions_;
    // dependency_(r) lists indices into systematic_positions_ whose sum gives
    // the pivot bit of row r
    std::vector<std::vector<int>> dependency_;

    void build_encoder();
};

/// Standard alist file (degree header, 1-based neighbor lists; zero padding
/// accepted). An optional sidecar file lists punctured 0-based columns, one
/// per line.
LdpcCode load_alist(const std::string& path, const std::string& puncture_path = "");

/// Seeded uniform permutation over [0, n). interleave gathers: out[i] = v[perm[i]].
class Interleaver {
  public:
    Interleaver(int n, std::uint64_t seed);
    /// Identity permutation.
    explicit Interleaver(int n);

    int size() const { return static_cast<int>(perm_.size()); }
    std::uint64_t seed() const { return seed_; }
    int perm(int i) const { return perm_[i]; }

    template <class Vec>
    Vec interleave(const Vec& v) const {
        require(v.size() == static_cast<Eigen::Index>(perm_.size()), "interleave: length mismatch");
        Vec out(v.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[perm_[i]];
        return out;
    }

    template <class Vec>
    Vec deinterleave(const Vec& v) const {
        require(v.size() == static_cast<Eigen::Index>(perm_.size()), "deinterleave: length mismatch");
        Vec out(v.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = v[static_cast<Eigen::Index>(i)];
        return out;
    }

  private:
    std::vector<int> perm_;
    std::uint64_t seed_ = 0;
};

}  // namespace isirx
