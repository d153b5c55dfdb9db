// SPDX-License-Identifier: Apache-2.0
#include "isirx/code.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace isirx {

namespace {

// Dense GF(2) row-reduction on bit-packed rows. Returns pivot column per
// reduced row.
struct Gf2Matrix {
    int cols = 0;
    std::vector<std::vector<std::uint64_t>> rows;

    explicit Gf2Matrix(int n_cols) : cols(n_cols) {}

    static int words_for(int n) { return (n + 63) / 64; }

    void add_row(const std::vector<int>& support) {
        std::vector<std::uint64_t> r(words_for(cols), 0);
        for (int c : support) r[c / 64] |= (1ULL << (c % 64));
        rows.push_back(std::move(r));
    }

    bool get(int r, int c) const { return (rows[r][c / 64] >> (c % 64)) & 1ULL; }

    void xor_rows(int dst, int src) {
        for (std::size_t w = 0; w < rows[dst].size(); ++w) rows[dst][w] ^= rows[src][w];
    }

    // Reduced row echelon form; returns pivot columns in order.
    std::vector<int> rref() {
        std::vector<int> pivots;
        int r = 0;
        const int m = static_cast<int>(rows.size());
        for (int c = 0; c < cols && r < m; ++c) {
            int piv = -1;
            for (int i = r; i < m; ++i) {
                if (get(i, c)) {
                    piv = i;
                    break;
                }
            }
            if (piv < 0) continue;
            std::swap(rows[r], rows[piv]);
            for (int i = 0; i < m; ++i) {
                if (i != r && get(i, c)) xor_rows(i, r);
            }
            pivots.push_back(c);
            ++r;
        }
        return pivots;
    }
};

}  // namespace

LdpcCode::LdpcCode(std::vector<std::vector<int>> rows, int n_code, std::vector<int> punctured)
    : rows_(std::move(rows)), n_code_(n_code) {
    require(n_code_ >= 1, "code length must be positive");
    for (auto& row : rows_) {
        std::sort(row.begin(), row.end());
        require(std::adjacent_find(row.begin(), row.end()) == row.end(),
                "parity-check matrix has duplicate entries in a row");
        for (int c : row) require(c >= 0 && c < n_code_, "column index out of range");
        nnz_ += static_cast<int>(row.size());
    }
    transmit_mask_.assign(n_code_, true);
    for (int p : punctured) {
        require(p >= 0 && p < n_code_, "punctured index out of range");
        require(transmit_mask_[p], "punctured index listed twice");
        transmit_mask_[p] = false;
    }
    for (int c = 0; c < n_code_; ++c) {
        if (transmit_mask_[c]) transmitted_positions_.push_back(c);
    }
    n_transmitted_ = static_cast<int>(transmitted_positions_.size());
    build_encoder();
}

void LdpcCode::build_encoder() {
    Gf2Matrix m(n_code_);
    for (const auto& row : rows_) m.add_row(row);
    pivot_positions_ = m.rref();
    const int rank = static_cast<int>(pivot_positions_.size());
    k_ = n_code_ - rank;
    require(k_ >= 1, "parity-check matrix leaves no information bits");

    std::vector<bool> is_pivot(n_code_, false);
    for (int c : pivot_positions_) is_pivot[c] = true;
    for (int c = 0; c < n_code_; ++c) {
        if (!is_pivot[c]) systematic_positions_.push_back(c);
    }

    // Row r of the RREF expresses pivot bit r as a sum of free bits.
    std::vector<int> free_index(n_code_, -1);
    for (std::size_t i = 0; i < systematic_positions_.size(); ++i)
        free_index[systematic_positions_[i]] = static_cast<int>(i);
    dependency_.resize(rank);
    for (int r = 0; r < rank; ++r) {
        for (int c = 0; c < n_code_; ++c) {
            if (c != pivot_positions_[r] && m.get(r, c)) {
                require(free_index[c] >= 0, "RREF row touches a non-free column");
                dependency_[r].push_back(free_index[c]);
            }
        }
    }
}

VecXi LdpcCode::encode(const VecXi& info_bits) const {
    require(info_bits.size() == k_, "encode: info length mismatch");
    VecXi c = VecXi::Zero(n_code_);
    for (std::size_t i = 0; i < systematic_positions_.size(); ++i)
        c[systematic_positions_[i]] = info_bits[static_cast<Eigen::Index>(i)] & 1;
    for (std::size_t r = 0; r < dependency_.size(); ++r) {
        int acc = 0;
        for (int fi : dependency_[r]) acc ^= info_bits[fi] & 1;
        c[pivot_positions_[r]] = acc;
    }
    return c;
}

VecXi LdpcCode::syndrome(const VecXi& code_bits) const {
    require(code_bits.size() == n_code_, "syndrome: length mismatch");
    VecXi s(num_checks());
    for (int r = 0; r < num_checks(); ++r) {
        int acc = 0;
        for (int c : rows_[r]) acc ^= code_bits[c] & 1;
        s[r] = acc;
    }
    return s;
}

VecXi LdpcCode::restrict_to_transmitted(const VecXi& code_bits) const {
    require(code_bits.size() == n_code_, "restrict: length mismatch");
    VecXi out(n_transmitted_);
    for (int i = 0; i < n_transmitted_; ++i) out[i] = code_bits[transmitted_positions_[i]];
    return out;
}

namespace {

std::vector<long> read_all_ints(std::istream& in, const std::string& path) {
    std::vector<long> v;
    long x = 0;
    while (in >> x) v.push_back(x);
    if (!in.eof()) throw ParseError("alist: non-numeric token in " + path);
    return v;
}

}  // namespace

LdpcCode load_alist(const std::string& path, const std::string& puncture_path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open alist file: " + path);
    const std::vector<long> tok = read_all_ints(f, path);
    std::size_t pos = 0;
    auto next = [&]() -> long {
        if (pos >= tok.size()) throw ParseError("alist: truncated file " + path);
        return tok[pos++];
    };

    const long n = next();
    const long m = next();
    if (n < 1 || m < 1) throw ParseError("alist: bad dimensions in " + path);
    const long max_col = next();
    const long max_row = next();
    std::vector<long> col_deg(n), row_deg(m);
    for (long c = 0; c < n; ++c) {
        col_deg[c] = next();
        if (col_deg[c] < 0 || col_deg[c] > max_col) throw ParseError("alist: bad column degree");
    }
    for (long r = 0; r < m; ++r) {
        row_deg[r] = next();
        if (row_deg[r] < 0 || row_deg[r] > max_row) throw ParseError("alist: bad row degree");
    }

    // Neighbor lists may be zero-padded to the max degree or unpadded. Detect
    // by total token count.
    const std::size_t remaining = tok.size() - pos;
    const std::size_t unpadded = static_cast<std::size_t>(
        std::accumulate(col_deg.begin(), col_deg.end(), 0L) +
        std::accumulate(row_deg.begin(), row_deg.end(), 0L));
    const std::size_t padded = static_cast<std::size_t>(n * max_col + m * max_row);
    bool is_padded = false;
    if (remaining == padded && padded != unpadded)
        is_padded = true;
    else if (remaining != unpadded)
        throw ParseError("alist: token count matches neither padded nor unpadded layout");

    auto read_list = [&](long degree, long pad_to, long max_val) {
        std::vector<int> out;
        const long count = is_padded ? pad_to : degree;
        for (long i = 0; i < count; ++i) {
            const long v = next();
            if (i < degree) {
                if (v < 1 || v > max_val) throw ParseError("alist: neighbor index out of range");
                out.push_back(static_cast<int>(v - 1));
            } else if (v != 0) {
                throw ParseError("alist: nonzero padding");
            }
        }
        std::set<int> uniq(out.begin(), out.end());
        if (uniq.size() != out.size()) throw ParseError("alist: duplicate edge");
        return out;
    };

    std::vector<std::vector<int>> col_lists(n), row_lists(m);
    for (long c = 0; c < n; ++c) col_lists[c] = read_list(col_deg[c], max_col, m);
    for (long r = 0; r < m; ++r) row_lists[r] = read_list(row_deg[r], max_row, n);

    // Cross-check the two redundant descriptions.
    std::set<std::pair<int, int>> from_cols;
    for (long c = 0; c < n; ++c)
        for (int r : col_lists[c]) from_cols.emplace(r, static_cast<int>(c));
    std::size_t edge_count = 0;
    for (long r = 0; r < m; ++r) {
        for (int c : row_lists[r]) {
            if (!from_cols.count({static_cast<int>(r), c}))
                throw ParseError("alist: row/column lists disagree");
            ++edge_count;
        }
    }
    if (edge_count != from_cols.size()) throw ParseError("alist: row/column lists disagree");

    std::vector<int> punctured;
    if (!puncture_path.empty()) {
        std::ifstream pf(puncture_path);
        if (!pf) throw ParseError("cannot open puncture file: " + puncture_path);
        long idx = 0;
        while (pf >> idx) punctured.push_back(static_cast<int>(idx));
        if (!pf.eof()) throw ParseError("puncture file: non-numeric token");
    }

    return LdpcCode(std::move(row_lists), static_cast<int>(n), std::move(punctured));
}

Interleaver::Interleaver(int n, std::uint64_t seed) : seed_(seed) {
    require(n >= 1, "interleaver size must be positive");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
    FrameRng rng(seed, /*stream=*/0x1717, /*index=*/0);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm_[i], perm_[j]);
    }
}

Interleaver::Interleaver(int n) : seed_(0) {
    require(n >= 1, "interleaver size must be positive");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
}

}  // namespace isirx
