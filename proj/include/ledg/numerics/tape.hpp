#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledg/numerics/tensor.hpp"

namespace ledg {

/// How gradients used for parameter updates are produced.
///  - first_order: gradients are plain values; updates built from them are
///    constants with respect to earlier parameters.
///  - exact: gradients are recorded on the tape and can be differentiated again.
enum class GradMode { first_order, exact };

enum class Op : std::uint8_t {
    leaf,
    matmul,
    transpose,
    add,
    sub,
    hadamard,
    scale,
    one_minus,
    sigmoid,
    relu,
    leaky_relu,
    mul_const,
    softmax_rows,
    log,
    reciprocal,
    clamp_min,
    smooth_l1,
    clip_unit,
    sum_all,
    broadcast_scalar,
    sum_rows,
    broadcast_rows,
    row_sum,
    broadcast_cols,
    mean_pool,
    add_row_vector,
    gather_rows,
    scatter_rows,
    concat_cols,
    slice_cols,
    pad_cols,
    pick_entries,
    scatter_entries,
};

/// Non-tensor arguments of a recorded primitive.
struct OpAux {
    double scalar = 0.0;
    std::size_t a = 0;
    std::size_t b = 0;
    std::shared_ptr<const std::vector<std::size_t>> index;
    std::shared_ptr<const Tensor> constant;  // mask or multiplier
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

namespace detail {

inline Tensor evaluate(Op op, const OpAux& aux, const Tensor* x, const Tensor* y) {
    using namespace kernels;
    switch (op) {
        case Op::leaf: throw ContractError("leaf nodes are not evaluated");
        case Op::matmul: return matmul(*x, *y);
        case Op::transpose: return transpose(*x);
        case Op::add: return add(*x, *y);
        case Op::sub: return sub(*x, *y);
        case Op::hadamard: return hadamard(*x, *y);
        case Op::scale: return scale(*x, aux.scalar);
        case Op::one_minus: return one_minus(*x);
        case Op::sigmoid: return sigmoid(*x);
        case Op::relu: return relu(*x);
        case Op::leaky_relu: return leaky_relu(*x, aux.scalar);
        case Op::mul_const: return hadamard(*x, *aux.constant);
        case Op::softmax_rows: return softmax_rows(*x, aux.constant.get());
        case Op::log: return kernels::log(*x);
        case Op::reciprocal: return reciprocal(*x);
        case Op::clamp_min: return clamp_min(*x, aux.scalar);
        case Op::smooth_l1: return smooth_l1(*x);
        case Op::clip_unit: return clip_unit(*x);
        case Op::sum_all: return sum_all(*x);
        case Op::broadcast_scalar: return broadcast_scalar(*x, aux.a, aux.b);
        case Op::sum_rows: return sum_rows(*x);
        case Op::broadcast_rows: return broadcast_rows(*x, aux.a);
        case Op::row_sum: return row_sum(*x);
        case Op::broadcast_cols: return broadcast_cols(*x, aux.a);
        case Op::mean_pool: return mean_pool(*x);
        case Op::add_row_vector: return add_row_vector(*x, *y);
        case Op::gather_rows: return gather_rows(*x, *aux.index);
        case Op::scatter_rows: return scatter_rows(*x, *aux.index, aux.a);
        case Op::concat_cols: return concat_cols(*x, *y);
        case Op::slice_cols: return slice_cols(*x, aux.a, aux.b);
        case Op::pad_cols: return pad_cols(*x, aux.a, aux.b);
        case Op::pick_entries: return pick_entries(*x, *aux.index);
        case Op::scatter_entries: return scatter_entries(*x, *aux.index, aux.a);
    }
    throw ContractError("unknown op");
}

inline int arity(Op op) {
    switch (op) {
        case Op::leaf: return 0;
        case Op::matmul:
        case Op::add:
        case Op::sub:
        case Op::hadamard:
        case Op::add_row_vector:
        case Op::concat_cols: return 2;
        default: return 1;
    }
}

}  // namespace detail

/// Append-only record of primitive operations. Node inputs always precede the
/// node, so the record is a topological order. Gradients computed with
/// `grad_recorded` are appended to the same tape and can be differentiated again.
class Tape {
public:
    struct Node {
        Op op = Op::leaf;
        std::array<std::size_t, 2> inputs{};
        OpAux aux;
        Tensor value;
        bool requires_grad = false;
    };

    explicit Tape(GradMode mode = GradMode::first_order) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    GradMode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const Node& node(std::size_t id) const { return nodes_.at(id); }

    /// A trainable input.
    Var variable(Tensor value) { return push_leaf(std::move(value), true); }
    /// A value that never receives gradient.
    Var constant(Tensor value) { return push_leaf(std::move(value), false); }

    Var record(Op op, std::span<const Var> inputs, OpAux aux = {}) {
        Node n;
        n.op = op;
        const Tensor* x = nullptr;
        const Tensor* y = nullptr;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            if (&inputs[k].tape() != this) throw ContractError("operands recorded on different tapes");
            n.inputs[k] = inputs[k].id();
            n.requires_grad = n.requires_grad || nodes_[inputs[k].id()].requires_grad;
        }
        if (!inputs.empty()) x = &nodes_[inputs[0].id()].value;
        if (inputs.size() > 1) y = &nodes_[inputs[1].id()].value;
        n.value = detail::evaluate(op, aux, x, y);
        n.aux = std::move(aux);
        nodes_.push_back(std::move(n));
        return Var(this, nodes_.size() - 1);
    }

    /// Gradient values of scalar `output` with respect to `wrt`. Variables the
    /// output does not depend on get a zero gradient.
    std::vector<Tensor> grad(const Var& output, std::span<const Var> wrt);

    /// Like grad(), but the gradient computation is itself recorded, so the
    /// returned handles can be used in further differentiable computation.
    std::vector<Var> grad_recorded(const Var& output, std::span<const Var> wrt);

    /// Gradients for a parameter update, as handles: recorded in exact mode,
    /// detached constants in first-order mode.
    std::vector<Var> grad_for_update(const Var& output, std::span<const Var> wrt) {
        if (mode_ == GradMode::exact) return grad_recorded(output, wrt);
        std::vector<Var> out;
        for (auto& g : grad(output, wrt)) out.push_back(constant(std::move(g)));
        return out;
    }

    /// Recomputes every non-leaf node from its recorded inputs and checks the
    /// result is bit-identical to what was recorded.
    bool replay_matches() const {
        for (const Node& n : nodes_) {
            if (n.op == Op::leaf) continue;
            const int k = detail::arity(n.op);
            const Tensor* x = k > 0 ? &nodes_[n.inputs[0]].value : nullptr;
            const Tensor* y = k > 1 ? &nodes_[n.inputs[1]].value : nullptr;
            if (!detail::evaluate(n.op, n.aux, x, y).bit_equal(n.value)) return false;
        }
        return true;
    }

private:
    Var push_leaf(Tensor value, bool requires_grad) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return Var(this, nodes_.size() - 1);
    }

    template <class V>
    std::vector<std::optional<V>> backprop(const Var& output, std::span<const Var> wrt);

    GradMode mode_;
    std::deque<Node> nodes_;  // deque: references stay valid while recording gradients
};

inline const Tensor& Var::value() const { return tape_->node(id_).value; }
inline bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

// ---------------------------------------------------------------------------
// Differentiable operations on Vars. Each mirrors the kernel of the same name.

namespace detail {
inline Var unary(Op op, const Var& x, OpAux aux = {}) {
    const Var in[1] = {x};
    return x.tape().record(op, in, std::move(aux));
}
inline Var binary(Op op, const Var& x, const Var& y, OpAux aux = {}) {
    const Var in[2] = {x, y};
    return x.tape().record(op, in, std::move(aux));
}
inline OpAux with_scalar(double s) {
    OpAux a;
    a.scalar = s;
    return a;
}
inline OpAux with_sizes(std::size_t a, std::size_t b = 0) {
    OpAux x;
    x.a = a;
    x.b = b;
    return x;
}
inline OpAux with_index(std::shared_ptr<const std::vector<std::size_t>> index, std::size_t a = 0) {
    OpAux x;
    x.index = std::move(index);
    x.a = a;
    return x;
}
inline OpAux with_constant(std::shared_ptr<const Tensor> c) {
    OpAux x;
    x.constant = std::move(c);
    return x;
}
}  // namespace detail

using Index = std::shared_ptr<const std::vector<std::size_t>>;

inline Index make_index(std::vector<std::size_t> v) {
    return std::make_shared<const std::vector<std::size_t>>(std::move(v));
}

inline Var matmul(const Var& a, const Var& b) { return detail::binary(Op::matmul, a, b); }
inline Var transpose(const Var& a) { return detail::unary(Op::transpose, a); }
inline Var add(const Var& a, const Var& b) { return detail::binary(Op::add, a, b); }
inline Var sub(const Var& a, const Var& b) { return detail::binary(Op::sub, a, b); }
inline Var hadamard(const Var& a, const Var& b) { return detail::binary(Op::hadamard, a, b); }
inline Var scale(const Var& a, double c) { return detail::unary(Op::scale, a, detail::with_scalar(c)); }
inline Var one_minus(const Var& a) { return detail::unary(Op::one_minus, a); }
inline Var sigmoid(const Var& a) { return detail::unary(Op::sigmoid, a); }
inline Var relu(const Var& a) { return detail::unary(Op::relu, a); }
inline Var leaky_relu(const Var& a, double slope) {
    return detail::unary(Op::leaky_relu, a, detail::with_scalar(slope));
}
/// Elementwise product with a constant tensor (no gradient flows into the constant).
inline Var mul_const(const Var& a, std::shared_ptr<const Tensor> c) {
    return detail::unary(Op::mul_const, a, detail::with_constant(std::move(c)));
}
inline Var softmax_rows(const Var& a, std::shared_ptr<const Tensor> mask = nullptr) {
    return detail::unary(Op::softmax_rows, a, detail::with_constant(std::move(mask)));
}
inline Var log(const Var& a) { return detail::unary(Op::log, a); }
inline Var reciprocal(const Var& a) { return detail::unary(Op::reciprocal, a); }
inline Var clamp_min(const Var& a, double floor) {
    return detail::unary(Op::clamp_min, a, detail::with_scalar(floor));
}
inline Var smooth_l1(const Var& a) { return detail::unary(Op::smooth_l1, a); }
inline Var clip_unit(const Var& a) { return detail::unary(Op::clip_unit, a); }
inline Var sum_all(const Var& a) { return detail::unary(Op::sum_all, a); }
inline Var broadcast_scalar(const Var& s, std::size_t rows, std::size_t cols) {
    return detail::unary(Op::broadcast_scalar, s, detail::with_sizes(rows, cols));
}
inline Var sum_rows(const Var& a) { return detail::unary(Op::sum_rows, a); }
inline Var broadcast_rows(const Var& a, std::size_t n) {
    return detail::unary(Op::broadcast_rows, a, detail::with_sizes(n));
}
inline Var row_sum(const Var& a) { return detail::unary(Op::row_sum, a); }
inline Var broadcast_cols(const Var& a, std::size_t c) {
    return detail::unary(Op::broadcast_cols, a, detail::with_sizes(c));
}
inline Var mean_pool(const Var& a) { return detail::unary(Op::mean_pool, a); }
inline Var add_row_vector(const Var& a, const Var& row) { return detail::binary(Op::add_row_vector, a, row); }
inline Var gather_rows(const Var& a, Index index) {
    return detail::unary(Op::gather_rows, a, detail::with_index(std::move(index)));
}
inline Var scatter_rows(const Var& a, Index index, std::size_t n) {
    return detail::unary(Op::scatter_rows, a, detail::with_index(std::move(index), n));
}
inline Var concat_cols(const Var& a, const Var& b) { return detail::binary(Op::concat_cols, a, b); }
inline Var slice_cols(const Var& a, std::size_t offset, std::size_t width) {
    return detail::unary(Op::slice_cols, a, detail::with_sizes(offset, width));
}
inline Var pad_cols(const Var& a, std::size_t offset, std::size_t total) {
    return detail::unary(Op::pad_cols, a, detail::with_sizes(offset, total));
}
inline Var pick_entries(const Var& a, Index column) {
    return detail::unary(Op::pick_entries, a, detail::with_index(std::move(column)));
}
inline Var scatter_entries(const Var& a, Index column, std::size_t cols) {
    return detail::unary(Op::scatter_entries, a, detail::with_index(std::move(column), cols));
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

// Tensor-side overloads with the same signatures as the Var ops, so that
// backward rules can be written once for both value types.
namespace kernels {
inline Tensor mul_const(const Tensor& a, const std::shared_ptr<const Tensor>& c) { return hadamard(a, *c); }
inline Tensor gather_rows(const Tensor& a, const Index& index) { return gather_rows(a, std::span(*index)); }
inline Tensor scatter_rows(const Tensor& a, const Index& index, std::size_t n) {
    return scatter_rows(a, std::span(*index), n);
}
inline Tensor pick_entries(const Tensor& a, const Index& column) { return pick_entries(a, std::span(*column)); }
inline Tensor scatter_entries(const Tensor& a, const Index& column, std::size_t cols) {
    return scatter_entries(a, std::span(*column), cols);
}
}  // namespace kernels

namespace detail {

inline const Tensor& value_of(const Tensor& t) { return t; }
inline const Tensor& value_of(const Var& v) { return v.value(); }

template <class F>
std::shared_ptr<const Tensor> mask_from(const Tensor& x, F pred) {
    Tensor m = x;
    for (double& v : m.data()) v = pred(v);
    return std::make_shared<const Tensor>(std::move(m));
}

/// Vector-Jacobian products of one primitive. `x`, `y` are the inputs, `out`
/// the recorded output, `g` the adjoint of the output. A disengaged optional
/// means "no gradient" for that input.
template <class V>
std::array<std::optional<V>, 2> local_grads(Op op, const OpAux& aux, const V& x, const V& y, const V& out,
                                            const V& g) {
    using namespace kernels;
    using R = std::array<std::optional<V>, 2>;
    switch (op) {
        case Op::leaf: return R{};
        case Op::matmul: return R{matmul(g, transpose(y)), matmul(transpose(x), g)};
        case Op::transpose: return R{transpose(g), {}};
        case Op::add: return R{g, g};
        case Op::sub: return R{g, scale(g, -1.0)};
        case Op::hadamard: return R{hadamard(g, y), hadamard(g, x)};
        case Op::scale:
            // An exactly-zero factor contributes no gradient at all (not a zero tensor).
            if (aux.scalar == 0.0) return R{};
            return R{scale(g, aux.scalar), {}};
        case Op::one_minus: return R{scale(g, -1.0), {}};
        case Op::sigmoid: return R{hadamard(g, hadamard(out, one_minus(out))), {}};
        case Op::relu: return R{mul_const(g, mask_from(value_of(x), [](double v) { return v > 0 ? 1.0 : 0.0; })), {}};
        case Op::leaky_relu: {
            const double s = aux.scalar;
            return R{mul_const(g, mask_from(value_of(x), [s](double v) { return v > 0 ? 1.0 : s; })), {}};
        }
        case Op::mul_const: return R{mul_const(g, aux.constant), {}};
        case Op::softmax_rows: {
            // J^T g = s * (g - rowsum(g * s)); masked entries have s = 0.
            const std::size_t c = value_of(out).cols();
            return R{hadamard(out, sub(g, broadcast_cols(row_sum(hadamard(g, out)), c))), {}};
        }
        case Op::log: return R{hadamard(g, reciprocal(x)), {}};
        case Op::reciprocal: return R{scale(hadamard(g, hadamard(out, out)), -1.0), {}};
        case Op::clamp_min: {
            const double f = aux.scalar;
            return R{mul_const(g, mask_from(value_of(x), [f](double v) { return v < f ? 0.0 : 1.0; })), {}};
        }
        case Op::smooth_l1: return R{hadamard(g, clip_unit(x)), {}};
        case Op::clip_unit:
            return R{mul_const(g, mask_from(value_of(x), [](double v) { return std::abs(v) < 1.0 ? 1.0 : 0.0; })),
                     {}};
        case Op::sum_all: {
            const Tensor& xv = value_of(x);
            return R{broadcast_scalar(g, xv.rows(), xv.cols()), {}};
        }
        case Op::broadcast_scalar: return R{sum_all(g), {}};
        case Op::sum_rows: return R{broadcast_rows(g, value_of(x).rows()), {}};
        case Op::broadcast_rows: return R{sum_rows(g), {}};
        case Op::row_sum: return R{broadcast_cols(g, value_of(x).cols()), {}};
        case Op::broadcast_cols: return R{row_sum(g), {}};
        case Op::mean_pool: {
            const std::size_t n = value_of(x).rows();
            return R{scale(broadcast_rows(g, n), 1.0 / static_cast<double>(n)), {}};
        }
        case Op::add_row_vector: return R{g, sum_rows(g)};
        case Op::gather_rows: return R{scatter_rows(g, aux.index, value_of(x).rows()), {}};
        case Op::scatter_rows: return R{gather_rows(g, aux.index), {}};
        case Op::concat_cols: {
            const std::size_t wa = value_of(x).cols(), wb = value_of(y).cols();
            return R{slice_cols(g, 0, wa), slice_cols(g, wa, wb)};
        }
        case Op::slice_cols: return R{pad_cols(g, aux.a, value_of(x).cols()), {}};
        case Op::pad_cols: return R{slice_cols(g, aux.a, value_of(x).cols()), {}};
        case Op::pick_entries: return R{scatter_entries(g, aux.index, value_of(x).cols()), {}};
        case Op::scatter_entries: return R{pick_entries(g, aux.index), {}};
    }
    return R{};
}

}  // namespace detail

template <class V>
std::vector<std::optional<V>> Tape::backprop(const Var& output, std::span<const Var> wrt) {
    if (&output.tape() != this) throw ContractError("grad: output recorded on a different tape");
    const Tensor& ov = output.value();
    if (ov.size() != 1) throw ContractError("grad: output must be a scalar, got shape " + ov.shape_str());

    std::vector<std::optional<V>> result(wrt.size());
    if (wrt.empty()) return result;
    std::size_t lo = output.id();
    for (const Var& w : wrt) {
        if (&w.tape() != this) throw ContractError("grad: variable recorded on a different tape");
        lo = std::min(lo, w.id());
    }
    const std::size_t hi = output.id();

    // adjoint[k] belongs to node lo + k; nodes below lo cannot influence wrt.
    std::vector<std::optional<V>> adjoint(hi - lo + 1);
    if constexpr (std::is_same_v<V, Tensor>) {
        adjoint[hi - lo] = Tensor::scalar(1.0);
    } else {
        adjoint[hi - lo] = constant(Tensor::scalar(1.0));
    }

    for (std::size_t id = hi + 1; id-- > lo;) {
        auto& slot = adjoint[id - lo];
        if (!slot) continue;
        const Node& n = nodes_[id];
        if (n.op == Op::leaf || !n.requires_grad) continue;
        const int k = detail::arity(n.op);
        const V g = *slot;
        std::array<std::optional<V>, 2> parts;
        if constexpr (std::is_same_v<V, Tensor>) {
            const Tensor& x = nodes_[n.inputs[0]].value;
            const Tensor& y = k > 1 ? nodes_[n.inputs[1]].value : x;
            parts = detail::local_grads<Tensor>(n.op, n.aux, x, y, n.value, g);
        } else {
            const Op op = n.op;
            const OpAux aux = n.aux;
            const auto inputs = n.inputs;
            const Var x(this, inputs[0]);
            const Var y(this, k > 1 ? inputs[1] : inputs[0]);
            parts = detail::local_grads<Var>(op, aux, x, y, Var(this, id), g);
        }
        for (int j = 0; j < k; ++j) {
            const std::size_t in = nodes_[id].inputs[j];
            if (!parts[j] || in < lo || !nodes_[in].requires_grad) continue;
            auto& dst = adjoint[in - lo];
            if (dst) {
                if constexpr (std::is_same_v<V, Tensor>) {
                    dst = kernels::add(*dst, *parts[j]);
                } else {
                    dst = add(*dst, *parts[j]);
                }
            } else {
                dst = std::move(parts[j]);
            }
        }
    }
    for (std::size_t i = 0; i < wrt.size(); ++i) result[i] = adjoint[wrt[i].id() - lo];
    return result;
}

inline std::vector<Tensor> Tape::grad(const Var& output, std::span<const Var> wrt) {
    auto parts = backprop<Tensor>(output, wrt);
    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (std::size_t i = 0; i < wrt.size(); ++i) {
        const Tensor& w = wrt[i].value();
        out.push_back(parts[i] ? std::move(*parts[i]) : Tensor(w.shape(), std::vector<double>(w.size(), 0.0)));
    }
    return out;
}

inline std::vector<Var> Tape::grad_recorded(const Var& output, std::span<const Var> wrt) {
    auto parts = backprop<Var>(output, wrt);
    std::vector<Var> out;
    out.reserve(wrt.size());
    for (std::size_t i = 0; i < wrt.size(); ++i) {
        if (parts[i]) {
            out.push_back(*parts[i]);
        } else {
            const Tensor& w = wrt[i].value();
            out.push_back(constant(Tensor(w.shape(), std::vector<double>(w.size(), 0.0))));
        }
    }
    return out;
}

}  // namespace ledg
