#pragma once

/// @file autodiff.hpp
/// Tape-based reverse-mode automatic differentiation over dense tensors.
/// Forward values are computed eagerly as nodes are appended, so data-dependent
/// control flow (e.g. fixed-point iteration counts) can read intermediate
/// values while the full computation stays differentiable. A Tape is confined
/// to one thread; node ids are topologically ordered by construction.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "hamred/kernels.hpp"
#include "hamred/tensor.hpp"

namespace hamred {

class Tape;

/// Handle to a tape node. Cheap to copy; valid until Tape::clear().
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

/// Gradients of a scalar seed with respect to the tape's parameter leaves,
/// keyed by node id. Each entry has the shape of its parameter.
struct Gradients {
    std::map<int, Tensor> by_id;

    const Tensor& at(Var v) const {
        auto it = by_id.find(v.id);
        if (it == by_id.end()) throw UsageError("no gradient recorded for node " + std::to_string(v.id));
        return it->second;
    }
    bool contains(Var v) const { return by_id.count(v.id) > 0; }
};

class Tape {
  public:
    enum class Op {
        Leaf,
        Add,
        Sub,
        Mul,
        Scale,
        AddRowVec,
        AddChanVec,
        MatMul,
        Transpose,
        Conv1d,
        Repeat2,
        Activation,
        ActivationGrad,
        Reshape,
        SliceCols,
        ConcatCols,
        SumSq,
        Sum,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        Tensor value;
        double c = 0.0;       // Scale factor
        int i0 = 0, i1 = 0;   // SliceCols bounds / Conv1d stride
        ActKind act = ActKind::None;
        bool reaches_param = false;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

    const Tensor& value(Var v) const { return node(v).value; }

    Var leaf(Tensor t, bool is_param = false) {
        Node n;
        n.op = Op::Leaf;
        n.value = std::move(t);
        n.reaches_param = is_param;
        return push(std::move(n));
    }

    Var constant(Tensor t) { return leaf(std::move(t), false); }

    // -- elementwise ---------------------------------------------------------

    Var add(Var a, Var b) {
        check_same_shape(value(a), value(b), "add");
        Node n = binary(Op::Add, a, b, Tensor(value(a).shape()));
        const Tensor &ta = value(a), &tb = value(b);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] + tb[i];
        return push(std::move(n));
    }

    Var sub(Var a, Var b) {
        check_same_shape(value(a), value(b), "sub");
        Node n = binary(Op::Sub, a, b, Tensor(value(a).shape()));
        const Tensor &ta = value(a), &tb = value(b);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] - tb[i];
        return push(std::move(n));
    }

    Var mul(Var a, Var b) {
        check_same_shape(value(a), value(b), "mul");
        Node n = binary(Op::Mul, a, b, Tensor(value(a).shape()));
        const Tensor &ta = value(a), &tb = value(b);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] * tb[i];
        return push(std::move(n));
    }

    Var scale(Var a, double c) {
        Node n = unary(Op::Scale, a, Tensor(value(a).shape()));
        n.c = c;
        const Tensor& ta = value(a);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = c * ta[i];
        return push(std::move(n));
    }

    /// x (B,n) + v (n), broadcast over rows (dense-layer bias).
    Var add_rowvec(Var x, Var v) {
        const Tensor &tx = value(x), &tv = value(v);
        if (tx.rank() != 2 || tv.rank() != 1 || tx.dim(1) != tv.dim(0))
            throw DimensionError("add_rowvec: " + Tensor::shape_str(tx.shape()) + " + " +
                                 Tensor::shape_str(tv.shape()));
        Node n = binary(Op::AddRowVec, x, v, Tensor(tx.shape()));
        const int rows = tx.dim(0), cols = tx.dim(1);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) n.value(i, j) = tx(i, j) + tv[j];
        return push(std::move(n));
    }

    /// x (B,C,L) + v (C), broadcast over batch and length (conv bias).
    Var add_chanvec(Var x, Var v) {
        const Tensor &tx = value(x), &tv = value(v);
        if (tx.rank() != 3 || tv.rank() != 1 || tx.dim(1) != tv.dim(0))
            throw DimensionError("add_chanvec: " + Tensor::shape_str(tx.shape()) + " + " +
                                 Tensor::shape_str(tv.shape()));
        Node n = binary(Op::AddChanVec, x, v, Tensor(tx.shape()));
        for (int b = 0; b < tx.dim(0); ++b)
            for (int c = 0; c < tx.dim(1); ++c)
                for (int l = 0; l < tx.dim(2); ++l) n.value(b, c, l) = tx(b, c, l) + tv[c];
        return push(std::move(n));
    }

    // -- linear algebra ------------------------------------------------------

    Var matmul(Var a, Var b) {
        const Tensor &ta = value(a), &tb = value(b);
        if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0))
            throw DimensionError("matmul: incompatible shapes " + Tensor::shape_str(ta.shape()) +
                                 " x " + Tensor::shape_str(tb.shape()));
        Node n = binary(Op::MatMul, a, b, Tensor({ta.dim(0), tb.dim(1)}));
        gemm_ab(n.value.data(), ta.data(), tb.data(), ta.dim(0), ta.dim(1), tb.dim(1));
        return push(std::move(n));
    }

    Var transpose(Var a) {
        const Tensor& ta = value(a);
        if (ta.rank() != 2) throw DimensionError("transpose: rank-2 tensor required");
        Node n = unary(Op::Transpose, a, Tensor({ta.dim(1), ta.dim(0)}));
        for (int i = 0; i < ta.dim(0); ++i)
            for (int j = 0; j < ta.dim(1); ++j) n.value(j, i) = ta(i, j);
        return push(std::move(n));
    }

    // -- convolution ---------------------------------------------------------

    /// Periodic cross-correlation, x (B,Cin,L), k (Cout,Cin,w) -> (B,Cout,L/stride).
    Var conv1d_periodic(Var x, Var k, int stride) {
        const Tensor &tx = value(x), &tk = value(k);
        if (tx.rank() != 3 || tk.rank() != 3 || tx.dim(1) != tk.dim(1))
            throw DimensionError("conv1d_periodic: x " + Tensor::shape_str(tx.shape()) +
                                 " kernel " + Tensor::shape_str(tk.shape()));
        const int lo = conv1d_out_len(tx.dim(2), stride);
        Node n = binary(Op::Conv1d, x, k, Tensor({tx.dim(0), tk.dim(0), lo}));
        n.i0 = stride;
        conv1d_periodic_fwd(n.value.data(), tx.data(), tk.data(), tx.dim(0), tx.dim(1), tx.dim(2),
                            tk.dim(0), tk.dim(2), stride);
        return push(std::move(n));
    }

    /// Duplicate every entry along the length axis: (B,C,L) -> (B,C,2L).
    Var repeat2(Var x) {
        const Tensor& tx = value(x);
        if (tx.rank() != 3) throw DimensionError("repeat2: rank-3 tensor required");
        Node n = unary(Op::Repeat2, x, Tensor({tx.dim(0), tx.dim(1), 2 * tx.dim(2)}));
        for (int b = 0; b < tx.dim(0); ++b)
            for (int c = 0; c < tx.dim(1); ++c)
                for (int l = 0; l < tx.dim(2); ++l) {
                    n.value(b, c, 2 * l) = tx(b, c, l);
                    n.value(b, c, 2 * l + 1) = tx(b, c, l);
                }
        return push(std::move(n));
    }

    // -- nonlinearities ------------------------------------------------------

    Var activation(Var a, ActKind kind) {
        Node n = unary(Op::Activation, a, Tensor(value(a).shape()));
        n.act = kind;
        const Tensor& ta = value(a);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = act_eval(kind, ta[i]);
        return push(std::move(n));
    }

    /// Elementwise derivative of the activation, used by the analytic
    /// input-gradient chain; differentiable via the second derivative.
    Var activation_grad(Var a, ActKind kind) {
        Node n = unary(Op::ActivationGrad, a, Tensor(value(a).shape()));
        n.act = kind;
        const Tensor& ta = value(a);
        for (int64_t i = 0; i < ta.numel(); ++i) n.value[i] = act_deriv(kind, ta[i]);
        return push(std::move(n));
    }

    // -- shape plumbing ------------------------------------------------------

    Var reshape(Var a, std::vector<int> shape) {
        Node n = unary(Op::Reshape, a, value(a).reshaped(std::move(shape)));
        return push(std::move(n));
    }

    Var slice_cols(Var a, int c0, int c1) {
        const Tensor& ta = value(a);
        if (ta.rank() != 2 || c0 < 0 || c1 > ta.dim(1) || c0 >= c1)
            throw DimensionError("slice_cols: bad range [" + std::to_string(c0) + "," +
                                 std::to_string(c1) + ") for " + Tensor::shape_str(ta.shape()));
        Node n = unary(Op::SliceCols, a, Tensor({ta.dim(0), c1 - c0}));
        n.i0 = c0;
        n.i1 = c1;
        for (int i = 0; i < ta.dim(0); ++i)
            for (int j = c0; j < c1; ++j) n.value(i, j - c0) = ta(i, j);
        return push(std::move(n));
    }

    Var concat_cols(Var a, Var b) {
        const Tensor &ta = value(a), &tb = value(b);
        if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(0) != tb.dim(0))
            throw DimensionError("concat_cols: " + Tensor::shape_str(ta.shape()) + " | " +
                                 Tensor::shape_str(tb.shape()));
        Node n = binary(Op::ConcatCols, a, b, Tensor({ta.dim(0), ta.dim(1) + tb.dim(1)}));
        for (int i = 0; i < ta.dim(0); ++i) {
            for (int j = 0; j < ta.dim(1); ++j) n.value(i, j) = ta(i, j);
            for (int j = 0; j < tb.dim(1); ++j) n.value(i, ta.dim(1) + j) = tb(i, j);
        }
        return push(std::move(n));
    }

    // -- reductions ----------------------------------------------------------

    Var sum_sq(Var a) {
        Node n = unary(Op::SumSq, a, Tensor({1}));
        const Tensor& ta = value(a);
        double acc = 0;
        for (int64_t i = 0; i < ta.numel(); ++i) acc += ta[i] * ta[i];
        n.value[0] = acc;
        return push(std::move(n));
    }

    Var sum(Var a) {
        Node n = unary(Op::Sum, a, Tensor({1}));
        const Tensor& ta = value(a);
        double acc = 0;
        for (int64_t i = 0; i < ta.numel(); ++i) acc += ta[i];
        n.value[0] = acc;
        return push(std::move(n));
    }

    // -- reverse pass --------------------------------------------------------

    /// Reverse accumulation from a scalar seed. Visits each node exactly once
    /// in reverse id order; returns gradients for every parameter leaf reached.
    Gradients backward(Var seed) const {
        const Node& sn = node(seed);
        if (sn.value.numel() != 1)
            throw UsageError("backward: seed must be scalar, got shape " +
                             Tensor::shape_str(sn.value.shape()));
        std::vector<Tensor> adj(nodes_.size());
        std::vector<char> touched(nodes_.size(), 0);
        adj[seed.id] = Tensor::scalar(1.0);
        touched[seed.id] = 1;

        for (int id = seed.id; id >= 0; --id) {
            if (!touched[id]) continue;
            const Node& n = nodes_[static_cast<size_t>(id)];
            if (n.op == Op::Leaf) continue;
            const Tensor& g = adj[id];
            switch (n.op) {
                case Op::Add: {
                    accum(adj, touched, n.a, g);
                    accum(adj, touched, n.b, g);
                    break;
                }
                case Op::Sub: {
                    accum(adj, touched, n.a, g);
                    if (wants(n.b)) {
                        Tensor& db = slot(adj, touched, n.b);
                        for (int64_t i = 0; i < g.numel(); ++i) db[i] -= g[i];
                    }
                    break;
                }
                case Op::Mul: {
                    if (wants(n.a)) {
                        const Tensor& tb = nodes_[n.b].value;
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < g.numel(); ++i) da[i] += g[i] * tb[i];
                    }
                    if (wants(n.b)) {
                        const Tensor& ta = nodes_[n.a].value;
                        Tensor& db = slot(adj, touched, n.b);
                        for (int64_t i = 0; i < g.numel(); ++i) db[i] += g[i] * ta[i];
                    }
                    break;
                }
                case Op::Scale: {
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < g.numel(); ++i) da[i] += n.c * g[i];
                    }
                    break;
                }
                case Op::AddRowVec: {
                    accum(adj, touched, n.a, g);
                    if (wants(n.b)) {
                        Tensor& dv = slot(adj, touched, n.b);
                        for (int i = 0; i < g.dim(0); ++i)
                            for (int j = 0; j < g.dim(1); ++j) dv[j] += g(i, j);
                    }
                    break;
                }
                case Op::AddChanVec: {
                    accum(adj, touched, n.a, g);
                    if (wants(n.b)) {
                        Tensor& dv = slot(adj, touched, n.b);
                        for (int b = 0; b < g.dim(0); ++b)
                            for (int c = 0; c < g.dim(1); ++c)
                                for (int l = 0; l < g.dim(2); ++l) dv[c] += g(b, c, l);
                    }
                    break;
                }
                case Op::MatMul: {
                    const Tensor &ta = nodes_[n.a].value, &tb = nodes_[n.b].value;
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        gemm_abT(da.data(), g.data(), tb.data(), g.dim(0), g.dim(1), tb.dim(0));
                    }
                    if (wants(n.b)) {
                        Tensor& db = slot(adj, touched, n.b);
                        gemm_aTb(db.data(), ta.data(), g.data(), ta.dim(0), ta.dim(1), g.dim(1));
                    }
                    break;
                }
                case Op::Transpose: {
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int i = 0; i < g.dim(0); ++i)
                            for (int j = 0; j < g.dim(1); ++j) da(j, i) += g(i, j);
                    }
                    break;
                }
                case Op::Conv1d: {
                    const Tensor &tx = nodes_[n.a].value, &tk = nodes_[n.b].value;
                    if (wants(n.a)) {
                        Tensor& dx = slot(adj, touched, n.a);
                        conv1d_periodic_bwd_x(dx.data(), g.data(), tk.data(), tx.dim(0), tx.dim(1),
                                              tx.dim(2), tk.dim(0), tk.dim(2), n.i0);
                    }
                    if (wants(n.b)) {
                        Tensor& dk = slot(adj, touched, n.b);
                        conv1d_periodic_bwd_k(dk.data(), g.data(), tx.data(), tx.dim(0), tx.dim(1),
                                              tx.dim(2), tk.dim(0), tk.dim(2), n.i0);
                    }
                    break;
                }
                case Op::Repeat2: {
                    if (wants(n.a)) {
                        Tensor& dx = slot(adj, touched, n.a);
                        for (int b = 0; b < dx.dim(0); ++b)
                            for (int c = 0; c < dx.dim(1); ++c)
                                for (int l = 0; l < dx.dim(2); ++l)
                                    dx(b, c, l) += g(b, c, 2 * l) + g(b, c, 2 * l + 1);
                    }
                    break;
                }
                case Op::Activation: {
                    if (wants(n.a)) {
                        const Tensor& ta = nodes_[n.a].value;
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < g.numel(); ++i)
                            da[i] += g[i] * act_deriv(n.act, ta[i]);
                    }
                    break;
                }
                case Op::ActivationGrad: {
                    if (wants(n.a)) {
                        const Tensor& ta = nodes_[n.a].value;
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < g.numel(); ++i)
                            da[i] += g[i] * act_second(n.act, ta[i]);
                    }
                    break;
                }
                case Op::Reshape: {
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < g.numel(); ++i) da[i] += g[i];
                    }
                    break;
                }
                case Op::SliceCols: {
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int i = 0; i < g.dim(0); ++i)
                            for (int j = 0; j < g.dim(1); ++j) da(i, n.i0 + j) += g(i, j);
                    }
                    break;
                }
                case Op::ConcatCols: {
                    const int na = nodes_[n.a].value.dim(1);
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int i = 0; i < g.dim(0); ++i)
                            for (int j = 0; j < na; ++j) da(i, j) += g(i, j);
                    }
                    if (wants(n.b)) {
                        Tensor& db = slot(adj, touched, n.b);
                        for (int i = 0; i < g.dim(0); ++i)
                            for (int j = 0; j < db.dim(1); ++j) db(i, j) += g(i, na + j);
                    }
                    break;
                }
                case Op::SumSq: {
                    if (wants(n.a)) {
                        const Tensor& ta = nodes_[n.a].value;
                        Tensor& da = slot(adj, touched, n.a);
                        const double g0 = 2.0 * g[0];
                        for (int64_t i = 0; i < ta.numel(); ++i) da[i] += g0 * ta[i];
                    }
                    break;
                }
                case Op::Sum: {
                    if (wants(n.a)) {
                        Tensor& da = slot(adj, touched, n.a);
                        for (int64_t i = 0; i < da.numel(); ++i) da[i] += g[0];
                    }
                    break;
                }
                case Op::Leaf: break;
            }
        }

        Gradients out;
        for (size_t id = 0; id < nodes_.size(); ++id) {
            const Node& n = nodes_[id];
            if (n.op == Op::Leaf && n.reaches_param) {
                if (touched[id])
                    out.by_id.emplace(static_cast<int>(id), std::move(adj[id]));
                else
                    out.by_id.emplace(static_cast<int>(id), Tensor(n.value.shape()));
            }
        }
        return out;
    }

  private:
    std::vector<Node> nodes_;

    const Node& node(Var v) const {
        if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
            throw UsageError("Var does not belong to this tape");
        return nodes_[static_cast<size_t>(v.id)];
    }

    Node unary(Op op, Var a, Tensor value) {
        node(a);
        Node n;
        n.op = op;
        n.a = a.id;
        n.value = std::move(value);
        n.reaches_param = nodes_[static_cast<size_t>(a.id)].reaches_param;
        return n;
    }

    Node binary(Op op, Var a, Var b, Tensor value) {
        node(a);
        node(b);
        Node n;
        n.op = op;
        n.a = a.id;
        n.b = b.id;
        n.value = std::move(value);
        n.reaches_param = nodes_[static_cast<size_t>(a.id)].reaches_param ||
                          nodes_[static_cast<size_t>(b.id)].reaches_param;
        return n;
    }

    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

    bool wants(int id) const {
        return id >= 0 && nodes_[static_cast<size_t>(id)].reaches_param;
    }

    Tensor& slot(std::vector<Tensor>& adj, std::vector<char>& touched, int id) const {
        if (!touched[id]) {
            adj[static_cast<size_t>(id)] = Tensor(nodes_[static_cast<size_t>(id)].value.shape());
            touched[id] = 1;
        }
        return adj[static_cast<size_t>(id)];
    }

    void accum(std::vector<Tensor>& adj, std::vector<char>& touched, int id, const Tensor& g) const {
        if (!wants(id)) return;
        Tensor& d = slot(adj, touched, id);
        for (int64_t i = 0; i < g.numel(); ++i) d[i] += g[i];
    }
};

/// Max over coordinates of |FD - AD| / (|FD| + |AD| + 1e-12), central
/// differences with step eps. `f` rebuilds the scalar graph on a fresh tape.
inline double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x,
                                double eps) {
    if (eps <= 0) throw UsageError("finite_diff_check: eps must be positive");
    Tape tape;
    Var xv = tape.leaf(x, true);
    Var y = f(tape, xv);
    Gradients grads = tape.backward(y);
    const Tensor& ad = grads.at(xv);

    auto eval = [&](const Tensor& xt) {
        Tape t;
        Var v = t.leaf(xt, false);
        return t.value(f(t, v))[0];
    };

    double worst = 0.0;
    Tensor xp = x;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double x0 = xp[i];
        xp[i] = x0 + eps;
        const double fp = eval(xp);
        xp[i] = x0 - eps;
        const double fm = eval(xp);
        xp[i] = x0;
        const double fd = (fp - fm) / (2 * eps);
        const double rel = std::abs(fd - ad[i]) / (std::abs(fd) + std::abs(ad[i]) + 1e-12);
        if (rel > worst) worst = rel;
    }
    return worst;
}

}  // namespace hamred
