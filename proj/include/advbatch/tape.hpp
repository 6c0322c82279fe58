#ifndef ADVBATCH_TAPE_HPP
#define ADVBATCH_TAPE_HPP

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records primitives in execution order, so node ids are already a
// topological order. Every primitive output and every backward contribution is
// rounded through the tape's precision policy. Reductions and matmul accumulate
// sequentially in row-major order so results are bit-reproducible.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  MatMul,
  Relu,
  Exp,
  Log,
  ReduceSum,
  ReduceMax,
  Broadcast,
  Reshape,
  Scale,
};

inline const char* to_string(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::MatMul: return "matmul";
    case Op::Relu: return "relu";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::ReduceSum: return "reduce_sum";
    case Op::ReduceMax: return "reduce_max";
    case Op::Broadcast: return "broadcast";
    case Op::Reshape: return "reshape";
    case Op::Scale: return "scale";
  }
  return "?";
}

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

/// Non-tensor operands of a primitive.
struct OpAttrs {
  std::size_t axis = 0;    // reduce_sum, reduce_max, broadcast
  std::size_t extent = 0;  // broadcast
  double factor = 1.0;     // scale
  Shape shape;             // reshape
};

inline OpAttrs axis_attrs(std::size_t axis) {
  OpAttrs attrs;
  attrs.axis = axis;
  return attrs;
}

namespace detail {

/// Splits a shape around `axis` into (outer, extent, inner) for strided loops.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
  AxisSplit(const Shape& s, std::size_t axis) {
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    extent = s[axis];
    for (std::size_t i = axis + 1; i < s.rank(); ++i) inner *= s[i];
  }
};

[[noreturn]] inline void conformance(Op op, const std::string& detail) {
  throw ConformanceError(std::string(to_string(op)) + ": " + detail);
}

inline void reduce_sum_into(std::span<const double> x, const Shape& s, std::size_t axis, std::vector<double>& out) {
  const AxisSplit sp(s, axis);
  out.assign(sp.outer * sp.inner, 0.0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.extent; ++k) {
      const double* src = x.data() + (o * sp.extent + k) * sp.inner;
      double* dst = out.data() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
}

inline void broadcast_into(std::span<const double> x, const Shape& out_shape, std::size_t axis,
                           std::vector<double>& out) {
  const AxisSplit sp(out_shape, axis);
  out.resize(sp.outer * sp.extent * sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.extent; ++k) {
      const double* src = x.data() + o * sp.inner;
      double* dst = out.data() + (o * sp.extent + k) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] = src[i];
    }
}

/// Forward kernel shared by Tape::forward and Tape::replay_matches.
inline Tensor compute(Op op, const OpAttrs& attrs, std::span<const Tensor* const> in, Precision prec) {
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      conformance(op, "expects " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
  };
  std::vector<double> out;
  switch (op) {
    case Op::Leaf:
      conformance(op, "leaves are not computed");
    case Op::Add:
    case Op::Sub:
    case Op::Mul: {
      need(2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (!(a.shape() == b.shape())) conformance(op, "shapes " + a.shape().str() + " and " + b.shape().str());
      out.resize(a.numel());
      const auto av = a.values();
      const auto bv = b.values();
      if (op == Op::Add)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
      else if (op == Op::Sub)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      return Tensor(a.shape(), std::move(out), prec);
    }
    case Op::MatMul: {
      need(2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0])
        conformance(op, "shapes " + a.shape().str() + " x " + b.shape().str());
      const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
      out.assign(m * n, 0.0);
      const double* av = a.values().data();
      const double* bv = b.values().data();
      for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = av[i * k + p];
          const double* brow = bv + p * n;
          for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
        }
      }
      return Tensor(Shape{m, n}, std::move(out), prec);
    }
    case Op::Relu:
    case Op::Exp:
    case Op::Log: {
      need(1);
      const auto xv = in[0]->values();
      out.resize(xv.size());
      if (op == Op::Relu)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
      else if (op == Op::Exp)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(xv[i]);
      return Tensor(in[0]->shape(), std::move(out), prec);
    }
    case Op::ReduceSum:
    case Op::ReduceMax: {
      need(1);
      const Shape& s = in[0]->shape();
      if (attrs.axis >= s.rank()) conformance(op, "axis " + std::to_string(attrs.axis) + " for shape " + s.str());
      if (s[attrs.axis] == 0) conformance(op, "empty reduction axis in shape " + s.str());
      if (op == Op::ReduceSum) {
        reduce_sum_into(in[0]->values(), s, attrs.axis, out);
      } else {
        const AxisSplit sp(s, attrs.axis);
        const auto xv = in[0]->values();
        out.resize(sp.outer * sp.inner);
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            double best = xv[o * sp.extent * sp.inner + i];
            for (std::size_t k = 1; k < sp.extent; ++k) best = std::max(best, xv[(o * sp.extent + k) * sp.inner + i]);
            out[o * sp.inner + i] = best;
          }
      }
      return Tensor(s.without(attrs.axis), std::move(out), prec);
    }
    case Op::Broadcast: {
      need(1);
      const Shape& s = in[0]->shape();
      if (attrs.axis > s.rank() || s.rank() == Shape::kMaxRank)
        conformance(op, "axis " + std::to_string(attrs.axis) + " for shape " + s.str());
      const Shape os = s.with(attrs.axis, attrs.extent);
      broadcast_into(in[0]->values(), os, attrs.axis, out);
      return Tensor(os, std::move(out), prec);
    }
    case Op::Reshape: {
      need(1);
      if (attrs.shape.numel() != in[0]->numel())
        conformance(op, "cannot reshape " + in[0]->shape().str() + " to " + attrs.shape.str());
      const auto xv = in[0]->values();
      return Tensor(attrs.shape, std::vector<double>(xv.begin(), xv.end()), prec);
    }
    case Op::Scale: {
      need(1);
      const auto xv = in[0]->values();
      out.resize(xv.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = attrs.factor * xv[i];
      return Tensor(in[0]->shape(), std::move(out), prec);
    }
  }
  conformance(op, "unknown primitive");
}

}  // namespace detail

/// Single-writer record of primitives. Not thread-safe; use one tape per evaluation.
class Tape {
 public:
  explicit Tape(Precision precision = Precision::Full32) : precision_(precision) {}

  Precision precision() const noexcept { return precision_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Differentiable leaf. The value is re-rounded to the tape's precision.
  NodeId input(const Tensor& t) { return leaf(t, true); }
  /// Non-differentiable leaf (weights during attacks, one-hot masks).
  NodeId constant(const Tensor& t) { return leaf(t, false); }

  std::span<const NodeId> input_ids() const noexcept { return inputs_; }

  NodeId forward(Op op, std::span<const NodeId> args, const OpAttrs& attrs = {}) {
    if (op == Op::Leaf) throw ContractError("forward: use input() or constant() for leaves");
    std::array<const Tensor*, 2> ptrs{};
    if (args.size() > ptrs.size()) detail::conformance(op, "too many inputs");
    bool grad = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
      check(args[i]);
      ptrs[i] = &nodes_[args[i].index].value;
      grad = grad || nodes_[args[i].index].requires_grad;
    }
    Tensor out = detail::compute(op, attrs, std::span<const Tensor* const>(ptrs.data(), args.size()), precision_);
    Node n{op, {}, 0, attrs, std::move(out), grad};
    for (std::size_t i = 0; i < args.size(); ++i) n.args[i] = args[i];
    n.arity = static_cast<std::uint8_t>(args.size());
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  NodeId add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
  NodeId matmul(NodeId a, NodeId b) { return binary(Op::MatMul, a, b); }
  NodeId relu(NodeId a) { return unary(Op::Relu, a); }
  NodeId exp(NodeId a) { return unary(Op::Exp, a); }
  NodeId log(NodeId a) { return unary(Op::Log, a); }
  NodeId reduce_sum(NodeId a, std::size_t axis) { return unary(Op::ReduceSum, a, axis_attrs(axis)); }
  NodeId reduce_max(NodeId a, std::size_t axis) { return unary(Op::ReduceMax, a, axis_attrs(axis)); }
  /// Inserts a new axis of `extent` copies at position `axis` (inverse of reduce_sum).
  NodeId broadcast(NodeId a, std::size_t axis, std::size_t extent) {
    OpAttrs attrs = axis_attrs(axis);
    attrs.extent = extent;
    return unary(Op::Broadcast, a, attrs);
  }
  NodeId reshape(NodeId a, Shape shape) {
    OpAttrs attrs;
    attrs.shape = shape;
    return unary(Op::Reshape, a, attrs);
  }
  NodeId scale(NodeId a, double factor) {
    OpAttrs attrs;
    attrs.factor = factor;
    return unary(Op::Scale, a, attrs);
  }

  /// Sum over every axis, down to a scalar.
  NodeId sum_all(NodeId a) {
    while (value(a).shape().rank() > 0) a = reduce_sum(a, 0);
    return a;
  }

  const Tensor& value(NodeId id) const {
    check(id);
    return nodes_[id.index].value;
  }
  Op op(NodeId id) const {
    check(id);
    return nodes_[id.index].op;
  }

  /// d(loss)/d(w) for each w in `wrt`, computed by one reverse sweep.
  std::vector<Tensor> gradient(NodeId loss, std::span<const NodeId> wrt) const {
    check(loss);
    if (value(loss).numel() != 1 || value(loss).shape().rank() != 0)
      throw ContractError("gradient: loss node has non-scalar shape " + value(loss).shape().str());
    for (NodeId w : wrt) {
      check(w);
      if (nodes_[w.index].op != Op::Leaf || !nodes_[w.index].requires_grad)
        throw ContractError("gradient: node " + std::to_string(w.index) + " is not a differentiable input");
    }

    std::vector<std::vector<double>> adj(loss.index + 1);
    adj[loss.index] = {1.0};
    std::vector<double> contrib;
    for (std::size_t id = loss.index + 1; id-- > 0;) {
      const Node& n = nodes_[id];
      if (n.op == Op::Leaf || adj[id].empty() || !n.requires_grad) continue;
      for (std::uint8_t slot = 0; slot < n.arity; ++slot) {
        const NodeId arg = n.args[slot];
        if (!nodes_[arg.index].requires_grad) continue;
        backward(n, slot, adj[id], contrib);
        round_in_place(precision_, contrib);
        accumulate(adj[arg.index], contrib);
      }
      if (id != loss.index) std::vector<double>().swap(adj[id]);
    }

    std::vector<Tensor> grads;
    grads.reserve(wrt.size());
    for (NodeId w : wrt) {
      const Tensor& v = nodes_[w.index].value;
      if (w.index < adj.size() && !adj[w.index].empty())
        grads.emplace_back(v.shape(), adj[w.index], precision_);
      else
        grads.push_back(Tensor::filled(v.shape(), 0.0, precision_));
    }
    return grads;
  }

  /// Recomputes every node from the recorded leaves and checks bit-equality.
  bool replay_matches() const {
    std::vector<Tensor> values(nodes_.size());
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (n.op == Op::Leaf) {
        values[id] = n.value;
        continue;
      }
      std::array<const Tensor*, 2> ptrs{};
      for (std::uint8_t s = 0; s < n.arity; ++s) ptrs[s] = &values[n.args[s].index];
      values[id] = detail::compute(n.op, n.attrs, std::span<const Tensor* const>(ptrs.data(), n.arity), precision_);
      if (!bit_equal(values[id], n.value)) return false;
    }
    return true;
  }

 private:
  struct Node {
    Op op;
    std::array<NodeId, 2> args;
    std::uint8_t arity;
    OpAttrs attrs;
    Tensor value;
    bool requires_grad;
  };

  NodeId leaf(const Tensor& t, bool differentiable) {
    nodes_.push_back(Node{Op::Leaf, {}, 0, {}, t.precision() == precision_ ? t : t.to(precision_), differentiable});
    const NodeId id{static_cast<std::uint32_t>(nodes_.size() - 1)};
    if (differentiable) inputs_.push_back(id);
    return id;
  }

  NodeId unary(Op op, NodeId a, const OpAttrs& attrs = {}) {
    const NodeId args[] = {a};
    return forward(op, args, attrs);
  }
  NodeId binary(Op op, NodeId a, NodeId b) {
    const NodeId args[] = {a, b};
    return forward(op, args);
  }

  void check(NodeId id) const {
    if (id.index >= nodes_.size()) throw ContractError("tape: unknown node id " + std::to_string(id.index));
  }

  static bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape()) || a.numel() != b.numel()) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
      if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    return true;
  }

  void accumulate(std::vector<double>& dst, std::vector<double>& src) const {
    if (dst.empty()) {
      dst.swap(src);
      return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = round_to(precision_, dst[i] + src[i]);
  }

  /// Contribution of node `n`'s adjoint `g` to its input in `slot`.
  void backward(const Node& n, std::uint8_t slot, std::span<const double> g, std::vector<double>& out) const {
    const Tensor& x0 = nodes_[n.args[0].index].value;
    switch (n.op) {
      case Op::Add:
        out.assign(g.begin(), g.end());
        return;
      case Op::Sub:
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = slot == 0 ? g[i] : -g[i];
        return;
      case Op::Mul: {
        const auto other = nodes_[n.args[slot == 0 ? 1 : 0].index].value.values();
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * other[i];
        return;
      }
      case Op::MatMul: {
        const Tensor& a = x0;
        const Tensor& b = nodes_[n.args[1].index].value;
        const std::size_t m = a.shape()[0], k = a.shape()[1], cols = b.shape()[1];
        const double* av = a.values().data();
        const double* bv = b.values().data();
        if (slot == 0) {
          // dA[i,p] = sum_j g[i,j] * B[p,j]
          out.assign(m * k, 0.0);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              const double* grow = g.data() + i * cols;
              const double* brow = bv + p * cols;
              for (std::size_t j = 0; j < cols; ++j) s += grow[j] * brow[j];
              out[i * k + p] = s;
            }
        } else {
          // dB[p,j] = sum_i A[i,p] * g[i,j]
          out.assign(k * cols, 0.0);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double s = av[i * k + p];
              const double* grow = g.data() + i * cols;
              double* orow = out.data() + p * cols;
              for (std::size_t j = 0; j < cols; ++j) orow[j] += s * grow[j];
            }
        }
        return;
      }
      case Op::Relu: {
        const auto xv = x0.values();
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = xv[i] > 0.0 ? g[i] : 0.0;
        return;
      }
      case Op::Exp: {
        const auto yv = n.value.values();
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * yv[i];
        return;
      }
      case Op::Log: {
        const auto xv = x0.values();
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] / xv[i];
        return;
      }
      case Op::ReduceSum:
        detail::broadcast_into(g, x0.shape(), n.attrs.axis, out);
        return;
      case Op::ReduceMax: {
        const detail::AxisSplit sp(x0.shape(), n.attrs.axis);
        const auto xv = x0.values();
        out.assign(x0.numel(), 0.0);
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < sp.extent; ++k)
              if (xv[(o * sp.extent + k) * sp.inner + i] > xv[(o * sp.extent + best) * sp.inner + i]) best = k;
            out[(o * sp.extent + best) * sp.inner + i] = g[o * sp.inner + i];
          }
        return;
      }
      case Op::Broadcast:
        detail::reduce_sum_into(g, n.value.shape(), n.attrs.axis, out);
        return;
      case Op::Reshape:
        out.assign(g.begin(), g.end());
        return;
      case Op::Scale:
        out.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = n.attrs.factor * g[i];
        return;
      case Op::Leaf:
        break;
    }
    throw ContractError("backward: no rule for leaf");
  }

  Precision precision_;
  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
};

}  // namespace advbatch

#endif  // ADVBATCH_TAPE_HPP
