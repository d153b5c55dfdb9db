// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isirx/common.hpp"
#include "isirx/maxstar.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace isirx::nn {

/// Named trainable tensor with gradient and optimizer moments.
struct Param {
    std::string name;
    MatXd value;
    MatXd grad;
    MatXd m;  // Adam first moment
    MatXd v;  // Adam second moment

    Param(std::string n, int rows, int cols)
        : name(std::move(n)),
          value(MatXd::Zero(rows, cols)),
          grad(MatXd::Zero(rows, cols)),
          m(MatXd::Zero(rows, cols)),
          v(MatXd::Zero(rows, cols)) {}
};

/// Owns parameters in creation order (which fixes flattening, checkpoint and
/// update order).
class ParamStore {
  public:
    Param& create(const std::string& name, int rows, int cols) {
        require(find(name) == nullptr, "duplicate parameter name: " + name);
        items_.push_back(std::make_unique<Param>(name, rows, cols));
        return *items_.back();
    }

    Param* find(const std::string& name) const {
        for (const auto& p : items_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    std::size_t size() const { return items_.size(); }
    Param& at(std::size_t i) { return *items_[i]; }
    const Param& at(std::size_t i) const { return *items_[i]; }

    void zero_grad() {
        for (auto& p : items_) p->grad.setZero();
    }

    std::size_t num_scalars() const {
        std::size_t n = 0;
        for (const auto& p : items_) n += static_cast<std::size_t>(p->value.size());
        return n;
    }

    /// Packs all gradients into one vector (creation order).
    VecXd flat_grad() const {
        VecXd out(num_scalars());
        Eigen::Index at = 0;
        for (const auto& p : items_) {
            out.segment(at, p->grad.size()) =
                Eigen::Map<const VecXd>(p->grad.data(), p->grad.size());
            at += p->grad.size();
        }
        return out;
    }

    void add_flat_grad(const VecXd& flat) {
        require(flat.size() == static_cast<Eigen::Index>(num_scalars()), "flat grad size mismatch");
        Eigen::Index at = 0;
        for (auto& p : items_) {
            Eigen::Map<VecXd>(p->grad.data(), p->grad.size()) += flat.segment(at, p->grad.size());
            at += p->grad.size();
        }
    }

  private:
    std::vector<std::unique_ptr<Param>> items_;
};

class Tape;

/// Handle into a tape node. Value and gradient live on the tape.
struct Tensor {
    Tape* tape = nullptr;
    int id = -1;

    const MatXd& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    bool valid() const { return tape != nullptr && id >= 0; }
};

/// Reverse-mode tape over dense matrices. With recording disabled the same
/// ops run value-only, so training and inference share one forward path.
class Tape {
  public:
    struct Node {
        MatXd value;
        MatXd grad;
        std::function<void(Tape&, const Node&)> backward;
        bool needs_grad = false;
        Param* bound = nullptr;
    };

    explicit Tape(bool recording = true) : recording_(recording) {}

    // Tensors hold stable pointers into the tape
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }

    Tensor constant(MatXd v) {
        nodes_.push_back({std::move(v), {}, nullptr, false, nullptr});
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    Tensor scalar(double v) { return constant(MatXd::Constant(1, 1, v)); }

    /// Leaf for a trainable parameter; backward() leaves d(loss)/d(param) on
    /// the node, harvested via for_each_param_grad.
    Tensor leaf(Param& p) {
        nodes_.push_back({p.value, {}, nullptr, recording_, recording_ ? &p : nullptr});
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    int emit(MatXd value, bool needs_grad, std::function<void(Tape&, const Node&)> bw) {
        Node n;
        n.value = std::move(value);
        n.needs_grad = recording_ && needs_grad;
        if (n.needs_grad) n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    MatXd& grad_of(int id) {
        Node& n = nodes_[id];
        if (n.grad.size() == 0) n.grad = MatXd::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Reverse sweep from a scalar loss node.
    void backward(const Tensor& loss) {
        require(loss.valid() && loss.tape == this, "backward: tensor not on this tape");
        require(loss.value().size() == 1, "backward: loss must be scalar");
        const Node& ln = nodes_[loss.id];
        if (!recording_ || !ln.needs_grad)
            throw std::runtime_error("backward on a tensor that was not recorded");
        grad_of(loss.id).setConstant(1.0);
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.size() == 0) continue;
            if (n.backward) n.backward(*this, n);
        }
    }

    template <class Fn>
    void for_each_param_grad(Fn&& fn) {
        for (auto& n : nodes_) {
            if (n.bound && n.grad.size() != 0) fn(*n.bound, n.grad);
        }
    }

  private:
    bool recording_;
    std::vector<Node> nodes_;
};

inline const MatXd& Tensor::value() const { return tape->node(id).value; }

namespace detail {
inline void check_same_tape(const Tensor& a, const Tensor& b) {
    require(a.tape == b.tape, "tensors live on different tapes");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// forward ops
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::check_same_tape(a, b);
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Tape& t = *a.tape;
    const bool ng = t.node(a.id).needs_grad || t.node(b.id).needs_grad;
    const int ia = a.id, ib = b.id;
    // column-by-column product: each output column is a pure function of its
    // input column, so results are bit-identical under column permutation
    // (blocked GEMM kernels round differently per column position)
    MatXd out(a.rows(), b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j)
        out.col(j).noalias() = a.value() * b.value().col(j);
    int id = t.emit(std::move(out), ng, [ia, ib](Tape& tp, const Tape::Node& n) {
        if (tp.node(ia).needs_grad) tp.grad_of(ia) += n.grad * tp.node(ib).value.transpose();
        if (tp.node(ib).needs_grad) {
            MatXd& gb = tp.grad_of(ib);
            const MatXd& av = tp.node(ia).value;
            for (Eigen::Index j = 0; j < n.grad.cols(); ++j)
                gb.col(j).noalias() += av.transpose() * n.grad.col(j);
        }
    });
    return {&t, id};
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_tape(a, b);
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    Tape& t = *a.tape;
    const bool ng = t.node(a.id).needs_grad || t.node(b.id).needs_grad;
    const int ia = a.id, ib = b.id;
    int id = t.emit(a.value() + b.value(), ng, [ia, ib](Tape& tp, const Tape::Node& n) {
        if (tp.node(ia).needs_grad) tp.grad_of(ia) += n.grad;
        if (tp.node(ib).needs_grad) tp.grad_of(ib) += n.grad;
    });
    return {&t, id};
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_tape(a, b);
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    Tape& t = *a.tape;
    const bool ng = t.node(a.id).needs_grad || t.node(b.id).needs_grad;
    const int ia = a.id, ib = b.id;
    int id = t.emit(a.value() - b.value(), ng, [ia, ib](Tape& tp, const Tape::Node& n) {
        if (tp.node(ia).needs_grad) tp.grad_of(ia) += n.grad;
        if (tp.node(ib).needs_grad) tp.grad_of(ib) -= n.grad;
    });
    return {&t, id};
}

/// Adds a column vector to every column.
inline Tensor add_bias(const Tensor& a, const Tensor& bias) {
    detail::check_same_tape(a, bias);
    require(bias.cols() == 1 && bias.rows() == a.rows(), "add_bias: bias must be (rows, 1)");
    Tape& t = *a.tape;
    const bool ng = t.node(a.id).needs_grad || t.node(bias.id).needs_grad;
    const int ia = a.id, ib = bias.id;
    int id = t.emit(a.value().colwise() + Eigen::VectorXd(bias.value().col(0)), ng,
                    [ia, ib](Tape& tp, const Tape::Node& n) {
                        if (tp.node(ia).needs_grad) tp.grad_of(ia) += n.grad;
                        if (tp.node(ib).needs_grad) tp.grad_of(ib) += n.grad.rowwise().sum();
                    });
    return {&t, id};
}

inline Tensor relu(const Tensor& a) {
    Tape& t = *a.tape;
    const int ia = a.id;
    int id = t.emit(a.value().cwiseMax(0.0), t.node(a.id).needs_grad,
                    [ia](Tape& tp, const Tape::Node& n) {
                        tp.grad_of(ia) +=
                            (tp.node(ia).value.array() > 0.0).cast<double>().matrix().cwiseProduct(
                                n.grad);
                    });
    return {&t, id};
}

inline Tensor sigmoid(const Tensor& a) {
    Tape& t = *a.tape;
    const int ia = a.id;
    MatXd out = a.value().unaryExpr([](double x) { return logistic(x); });
    int id = t.emit(std::move(out), t.node(a.id).needs_grad, [ia](Tape& tp, const Tape::Node& n) {
        const MatXd& s = n.value;
        tp.grad_of(ia) += (s.array() * (1.0 - s.array())).matrix().cwiseProduct(n.grad);
    });
    return {&t, id};
}

inline Tensor scale(const Tensor& a, double c) {
    Tape& t = *a.tape;
    const int ia = a.id;
    int id = t.emit(a.value() * c, t.node(a.id).needs_grad,
                    [ia, c](Tape& tp, const Tape::Node& n) { tp.grad_of(ia) += c * n.grad; });
    return {&t, id};
}

/// Mean over all entries; returns a 1x1 tensor.
inline Tensor mean(const Tensor& a) {
    Tape& t = *a.tape;
    const int ia = a.id;
    const double inv = 1.0 / static_cast<double>(a.value().size());
    int id = t.emit(MatXd::Constant(1, 1, a.value().mean()), t.node(a.id).needs_grad,
                    [ia, inv](Tape& tp, const Tape::Node& n) {
                        tp.grad_of(ia).array() += n.grad(0, 0) * inv;
                    });
    return {&t, id};
}

/// Vertical concatenation (along features).
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_rows: empty input");
    Tape& t = *parts[0].tape;
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts[0].cols();
    bool ng = false;
    for (const auto& p : parts) {
        detail::check_same_tape(parts[0], p);
        require(p.cols() == cols, "concat_rows: column count mismatch");
        rows += p.rows();
        ng = ng || t.node(p.id).needs_grad;
    }
    MatXd out(rows, cols);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offsets, sizes;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        ids.push_back(p.id);
        offsets.push_back(at);
        sizes.push_back(p.rows());
        at += p.rows();
    }
    int id = t.emit(std::move(out), ng, [ids, offsets, sizes](Tape& tp, const Tape::Node& n) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (tp.node(ids[i]).needs_grad)
                tp.grad_of(ids[i]) += n.grad.middleRows(offsets[i], sizes[i]);
        }
    });
    return {&t, id};
}

/// Horizontal concatenation.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: empty input");
    Tape& t = *parts[0].tape;
    Eigen::Index cols = 0;
    const Eigen::Index rows = parts[0].rows();
    bool ng = false;
    for (const auto& p : parts) {
        detail::check_same_tape(parts[0], p);
        require(p.rows() == rows, "concat_cols: row count mismatch");
        cols += p.cols();
        ng = ng || t.node(p.id).needs_grad;
    }
    MatXd out(rows, cols);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offsets, sizes;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        ids.push_back(p.id);
        offsets.push_back(at);
        sizes.push_back(p.cols());
        at += p.cols();
    }
    int id = t.emit(std::move(out), ng, [ids, offsets, sizes](Tape& tp, const Tape::Node& n) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (tp.node(ids[i]).needs_grad)
                tp.grad_of(ids[i]) += n.grad.middleCols(offsets[i], sizes[i]);
        }
    });
    return {&t, id};
}

/// Column selection: out.col(i) = a.col(idx[i]).
inline Tensor gather_cols(const Tensor& a, std::vector<int> idx) {
    Tape& t = *a.tape;
    const int ia = a.id;
    MatXd out(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] >= 0 && idx[i] < a.cols(), "gather_cols: index out of range");
        out.col(static_cast<Eigen::Index>(i)) = a.value().col(idx[i]);
    }
    int id = t.emit(std::move(out), t.node(a.id).needs_grad,
                    [ia, idx = std::move(idx)](Tape& tp, const Tape::Node& n) {
                        MatXd& g = tp.grad_of(ia);
                        for (std::size_t i = 0; i < idx.size(); ++i)
                            g.col(idx[i]) += n.grad.col(static_cast<Eigen::Index>(i));
                    });
    return {&t, id};
}

/// Repeats a column vector n times.
inline Tensor broadcast_col(const Tensor& v, int n) {
    require(v.cols() == 1, "broadcast_col: input must be a column");
    Tape& t = *v.tape;
    const int iv = v.id;
    MatXd out = v.value().col(0).replicate(1, n);
    int id = t.emit(std::move(out), t.node(v.id).needs_grad,
                    [iv](Tape& tp, const Tape::Node& n) {
                        tp.grad_of(iv) += n.grad.rowwise().sum();
                    });
    return {&t, id};
}

/// Mean-aggregation of message columns into per-node columns. Sources are
/// (tensor, adjacency) pairs; adjacency lists per node index columns of the
/// matching tensor, and the mean normalizes by the total neighbor count over
/// all sources. Nodes with no neighbors aggregate to zero. Sums run in
/// adjacency order, so results do not depend on edge storage order.
inline Tensor scatter_mean(const std::vector<Tensor>& sources,
                           const std::vector<const std::vector<std::vector<int>>*>& adjacency,
                           int num_nodes) {
    require(!sources.empty() && sources.size() == adjacency.size(), "scatter_mean: bad inputs");
    Tape& t = *sources[0].tape;
    const Eigen::Index d = sources[0].rows();
    bool ng = false;
    for (const auto& s : sources) {
        detail::check_same_tape(sources[0], s);
        require(s.rows() == d, "scatter_mean: feature size mismatch");
        ng = ng || t.node(s.id).needs_grad;
    }
    MatXd out = MatXd::Zero(d, num_nodes);
    std::vector<double> inv_count(num_nodes, 0.0);
    for (int v = 0; v < num_nodes; ++v) {
        std::size_t cnt = 0;
        for (const auto* adj : adjacency) cnt += (*adj)[v].size();
        if (cnt == 0) continue;
        inv_count[v] = 1.0 / static_cast<double>(cnt);
        for (std::size_t si = 0; si < sources.size(); ++si) {
            for (int e : (*adjacency[si])[v]) out.col(v) += sources[si].value().col(e);
        }
        out.col(v) *= inv_count[v];
    }
    std::vector<int> ids;
    for (const auto& s : sources) ids.push_back(s.id);
    int id = t.emit(std::move(out), ng,
                    [ids, adjacency, inv_count, num_nodes](Tape& tp, const Tape::Node& n) {
                        for (std::size_t si = 0; si < ids.size(); ++si) {
                            if (!tp.node(ids[si]).needs_grad) continue;
                            MatXd& g = tp.grad_of(ids[si]);
                            for (int v = 0; v < num_nodes; ++v) {
                                if (inv_count[v] == 0.0) continue;
                                for (int e : (*adjacency[si])[v])
                                    g.col(e) += n.grad.col(v) * inv_count[v];
                            }
                        }
                    });
    return {&t, id};
}

/// Mean of scalar tensors (the multi-loss combiner).
inline Tensor mean_scalars(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "mean_scalars: empty input");
    Tensor acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return scale(acc, 1.0 / static_cast<double>(parts.size()));
}

/// Binary cross-entropy in bits from LLRs (log P(0)/P(1)); numerically
/// stable fused form of bce_loss(sigmoid(-llr), bits).
inline Tensor bce_from_llr(const Tensor& llr, const VecXi& bits) {
    require(llr.value().size() == bits.size(), "bce_from_llr: length mismatch");
    Tape& t = *llr.tape;
    const int ia = llr.id;
    const double inv_n_ln2 = 1.0 / (static_cast<double>(bits.size()) * std::log(2.0));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < llr.value().size(); ++i) {
        const double s = bits(i) == 1 ? 1.0 : -1.0;
        acc += softplus(s * llr.value()(i));
    }
    VecXd sign(bits.size());
    for (Eigen::Index i = 0; i < bits.size(); ++i) sign[i] = bits(i) == 1 ? 1.0 : -1.0;
    int id = t.emit(MatXd::Constant(1, 1, acc * inv_n_ln2), t.node(ia).needs_grad,
                    [ia, sign, inv_n_ln2](Tape& tp, const Tape::Node& n) {
                        MatXd& g = tp.grad_of(ia);
                        const MatXd& x = tp.node(ia).value;
                        const double go = n.grad(0, 0) * inv_n_ln2;
                        for (Eigen::Index i = 0; i < x.size(); ++i)
                            g(i) += go * sign[i] * logistic(sign[i] * x(i));
                    });
    return {&t, id};
}

/// Binary cross-entropy in bits from probability estimates of bit = 1,
/// clamped to [1e-7, 1 - 1e-7].
inline Tensor bce_loss(const Tensor& prob_one, const VecXi& bits) {
    require(prob_one.value().size() == bits.size(), "bce_loss: length mismatch");
    Tape& t = *prob_one.tape;
    const int ia = prob_one.id;
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    const double inv_n_ln2 = 1.0 / (static_cast<double>(bits.size()) * std::log(2.0));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < bits.size(); ++i) {
        const double p = clip(prob_one.value()(i), lo, hi);
        acc -= bits(i) == 1 ? std::log(p) : std::log(1.0 - p);
    }
    VecXi b = bits;
    int id = t.emit(MatXd::Constant(1, 1, acc * inv_n_ln2), t.node(ia).needs_grad,
                    [ia, b, inv_n_ln2](Tape& tp, const Tape::Node& n) {
                        MatXd& g = tp.grad_of(ia);
                        const MatXd& x = tp.node(ia).value;
                        const double go = n.grad(0, 0) * inv_n_ln2;
                        for (Eigen::Index i = 0; i < x.size(); ++i) {
                            const double p = x(i);
                            if (p < 1e-7 || p > 1.0 - 1e-7) continue;  // clamped: flat
                            g(i) += go * (b(i) == 1 ? -1.0 / p : 1.0 / (1.0 - p));
                        }
                    });
    return {&t, id};
}

}  // namespace isirx::nn
