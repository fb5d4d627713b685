// metastate.hpp
// Contraction of a net into its joint state and the per-node reduction
// operators. The joint ket assigns each full assignment the product of the
// node tables' amplitudes; the joint density is its rank-one outer product.
// Reductions per node: Trace (incoherent sum, removes the register),
// Classicize (zero every entry whose row and column differ at the register;
// keeps it), Slash (coherent sum over the register on both sides, removes
// it, may change the trace), Bra (project a ket slice), KetBra (project and
// keep the register).

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qbnet/core.hpp"
#include "qbnet/net.hpp"
#include "qbnet/state.hpp"

namespace qbnet {

// One state label per node, in declaration order.
struct Assignment {
  std::vector<std::string> labels;
};

// Product of table lookups for a complete assignment. Any zero factor makes
// the whole amplitude zero.
inline Cx total_amplitude(const QBNet& net, const Assignment& assignment) {
  if (assignment.labels.size() != net.nodes.size())
    throw Error(ErrorKind::DimensionMismatch,
                "assignment must name one state per node");
  std::vector<std::size_t> state_idx(net.nodes.size());
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    auto idx = net.nodes[i].space().index_of(assignment.labels[i]);
    if (!idx)
      throw Error(ErrorKind::UnknownState, "state '" + assignment.labels[i] +
                                               "' not in node '" + net.nodes[i].label + "'");
    state_idx[i] = *idx;
  }
  Cx amp{1.0, 0.0};
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Node& n = net.nodes[i];
    std::size_t pj = 0;
    for (std::size_t p = 0; p < n.parents.size(); ++p) {
      auto j = net.index_of(n.parents[p]);
      if (!j) throw Error(ErrorKind::UnknownParent, "parent '" + n.parents[p] + "' not declared");
      pj = pj * n.table.parent_spaces[p].size() + state_idx[*j];
    }
    amp *= n.table.amp_at(state_idx[i], pj);
    if (amp == Cx{0.0, 0.0}) return amp;
  }
  return amp;
}

// Joint ket over one register per node (declaration order, leftmost
// slowest). Refuses joint dimensions above the cap.
inline IndexedKet build_meta_ket(const QBNet& net,
                                 std::size_t cap = default_dimension_cap) {
  std::vector<Register> regs;
  regs.reserve(net.nodes.size());
  for (const Node& n : net.nodes) regs.push_back({n.label, n.space()});
  const std::size_t dim = joint_dim(regs);
  if (dim > cap)
    throw Error(ErrorKind::DimensionCapExceeded,
                "joint dimension " + std::to_string(dim) + " exceeds the cap of " +
                    std::to_string(cap));

  // Resolve parent indices once; contraction walks every assignment.
  const std::size_t count = net.nodes.size();
  std::vector<std::vector<std::size_t>> parent_of(count);
  for (std::size_t i = 0; i < count; ++i)
    for (const auto& p : net.nodes[i].parents) {
      auto j = net.index_of(p);
      if (!j) throw Error(ErrorKind::UnknownParent, "parent '" + p + "' not declared");
      parent_of[i].push_back(*j);
    }

  const std::vector<std::size_t> dims = dims_of(regs);
  IndexedKet ket = IndexedKet::zero(regs);
  std::vector<std::size_t> digits(count, 0);
  for (std::size_t flat = 0; flat < dim; ++flat) {
    unflatten(dims, flat, digits);
    Cx amp{1.0, 0.0};
    for (std::size_t i = 0; i < count && amp != Cx{0.0, 0.0}; ++i) {
      const Node& n = net.nodes[i];
      std::size_t pj = 0;
      for (std::size_t p = 0; p < parent_of[i].size(); ++p)
        pj = pj * n.table.parent_spaces[p].size() + digits[parent_of[i][p]];
      amp *= n.table.amp_at(digits[i], pj);
    }
    ket.amplitudes[flat] = amp;
  }
  return ket;
}

// Rank-one density of the joint ket.
inline DensityMatrix meta_density(const QBNet& net, std::size_t cap = default_dimension_cap) {
  return outer_product(build_meta_ket(net, cap));
}

namespace detail {

struct RegisterSplit {
  std::size_t before;  // joint size of registers left of the target
  std::size_t size;    // target register size
  std::size_t after;   // joint size of registers right of the target
  std::size_t pos;     // target position in the register list
};

inline RegisterSplit split_at(const std::vector<Register>& regs, const std::string& id) {
  auto pos = find_register(regs, id);
  if (!pos) throw Error(ErrorKind::UnknownRegister, "no register named '" + id + "'");
  RegisterSplit s{1, regs[*pos].space.size(), 1, *pos};
  for (std::size_t i = 0; i < *pos; ++i) s.before *= regs[i].space.size();
  for (std::size_t i = *pos + 1; i < regs.size(); ++i) s.after *= regs[i].space.size();
  return s;
}

}  // namespace detail

// Incoherent sum over one register: the partial trace. Removes the register
// and preserves the trace exactly.
inline DensityMatrix trace_node(const DensityMatrix& rho, const std::string& id) {
  return partial_trace(rho, {id});
}

// Zeroes every entry whose row and column disagree at the register; the
// diagonal (and so the trace) is untouched and the register survives.
inline DensityMatrix classicize_node(const DensityMatrix& rho, const std::string& id) {
  const auto s = detail::split_at(rho.registers, id);
  DensityMatrix out = rho;
  const std::size_t dim = rho.dim();
  for (std::size_t r = 0; r < dim; ++r) {
    const std::size_t rb = (r / s.after) % s.size;
    for (std::size_t c = 0; c < dim; ++c)
      if (((c / s.after) % s.size) != rb) out.m.at(r, c) = Cx{0.0, 0.0};
  }
  return out;
}

// Coherent sum over one register on both sides: contracts with sum_b <b|
// left and right, removing the register. The result needs no longer have
// unit trace; it is flagged when the trace strays from 1 by more than the
// default tolerance.
inline DensityMatrix slash_node(const DensityMatrix& rho, const std::string& id) {
  const auto s = detail::split_at(rho.registers, id);
  DensityMatrix out;
  out.registers = rho.registers;
  out.registers.erase(out.registers.begin() + static_cast<std::ptrdiff_t>(s.pos));
  const std::size_t dim_out = s.before * s.after;
  out.m = Matrix(dim_out, dim_out);
  for (std::size_t r = 0; r < dim_out; ++r) {
    const std::size_t r_hi = r / s.after, r_lo = r % s.after;
    for (std::size_t c = 0; c < dim_out; ++c) {
      const std::size_t c_hi = c / s.after, c_lo = c % s.after;
      Cx sum{0.0, 0.0};
      for (std::size_t rb = 0; rb < s.size; ++rb)
        for (std::size_t cb = 0; cb < s.size; ++cb)
          sum += rho.m.at((r_hi * s.size + rb) * s.after + r_lo,
                          (c_hi * s.size + cb) * s.after + c_lo);
      out.m.at(r, c) = sum;
    }
  }
  out.flagged_unnormalized =
      rho.flagged_unnormalized || std::abs(trace(out.m).real() - 1.0) > default_tol ||
      std::abs(trace(out.m).imag()) > default_tol;
  return out;
}

namespace detail {

// Coherent sum over one register of a ket (used to run Slash before the
// outer product is ever formed).
inline IndexedKet slash_ket(const IndexedKet& ket, const std::string& id) {
  const auto s = split_at(ket.registers, id);
  IndexedKet out;
  out.registers = ket.registers;
  out.registers.erase(out.registers.begin() + static_cast<std::ptrdiff_t>(s.pos));
  out.amplitudes.assign(s.before * s.after, Cx{0.0, 0.0});
  for (std::size_t hi = 0; hi < s.before; ++hi)
    for (std::size_t lo = 0; lo < s.after; ++lo) {
      Cx sum{0.0, 0.0};
      for (std::size_t b = 0; b < s.size; ++b)
        sum += ket.amplitudes[(hi * s.size + b) * s.after + lo];
      out.amplitudes[hi * s.after + lo] = sum;
    }
  return out;
}

}  // namespace detail

// Keeps only the slice where the register reads `value` and removes the
// register: amplitude(rest) = amplitude(rest, value).
inline IndexedKet bra_node(const IndexedKet& ket, const std::string& id,
                           const std::string& value) {
  const auto s = detail::split_at(ket.registers, id);
  auto vi = ket.registers[s.pos].space.index_of(value);
  if (!vi)
    throw Error(ErrorKind::UnknownState,
                "state '" + value + "' not in register '" + id + "'");
  IndexedKet out;
  out.registers = ket.registers;
  out.registers.erase(out.registers.begin() + static_cast<std::ptrdiff_t>(s.pos));
  out.amplitudes.assign(s.before * s.after, Cx{0.0, 0.0});
  for (std::size_t hi = 0; hi < s.before; ++hi)
    for (std::size_t lo = 0; lo < s.after; ++lo)
      out.amplitudes[hi * s.after + lo] = ket.amplitudes[(hi * s.size + *vi) * s.after + lo];
  return out;
}

// Projects onto |value><value| at the register but keeps it: every
// amplitude whose register entry differs from `value` becomes zero.
inline IndexedKet ketbra_node(const IndexedKet& ket, const std::string& id,
                              const std::string& value) {
  const auto s = detail::split_at(ket.registers, id);
  auto vi = ket.registers[s.pos].space.index_of(value);
  if (!vi)
    throw Error(ErrorKind::UnknownState,
                "state '" + value + "' not in register '" + id + "'");
  IndexedKet out = ket;
  for (std::size_t i = 0; i < out.amplitudes.size(); ++i)
    if (((i / s.after) % s.size) != *vi) out.amplitudes[i] = Cx{0.0, 0.0};
  return out;
}

enum class NodeOpKind { Keep, Trace, Classicize, Slash, Bra, KetBra };

struct NodeOp {
  NodeOpKind kind = NodeOpKind::Keep;
  std::string state_label;  // Bra / KetBra only

  static NodeOp keep() { return {}; }
  static NodeOp trace() { return {NodeOpKind::Trace, {}}; }
  static NodeOp classicize() { return {NodeOpKind::Classicize, {}}; }
  static NodeOp slash() { return {NodeOpKind::Slash, {}}; }
  static NodeOp bra(std::string v) { return {NodeOpKind::Bra, std::move(v)}; }
  static NodeOp ketbra(std::string v) { return {NodeOpKind::KetBra, std::move(v)}; }
};

// Nodes not mentioned are kept untouched.
using NodeOpPlan = std::map<std::string, NodeOp>;

struct EvalResult {
  DensityMatrix rho;      // registers: the kept, classicized, and ketbra'd nodes
  double trace_deviation = 0.0;
  bool flagged = false;   // trace strayed from 1 by more than the tolerance
};

// Contracts the net and applies the plan. Ket-level operators (Bra, KetBra,
// Slash) run on the joint ket in node declaration order; the density is
// formed afterwards and Classicize then Trace run on it, again in node
// order. The result is never renormalized: callers see the exact trace.
inline EvalResult evaluate(const QBNet& net, const NodeOpPlan& plan,
                           std::size_t cap = default_dimension_cap,
                           double tol = default_tol) {
  for (const auto& [label, op] : plan) {
    auto i = net.index_of(label);
    if (!i) throw Error(ErrorKind::UnknownRegister, "plan names unknown node '" + label + "'");
    if (op.kind == NodeOpKind::Bra || op.kind == NodeOpKind::KetBra)
      if (!net.nodes[*i].space().index_of(op.state_label))
        throw Error(ErrorKind::UnknownState, "state '" + op.state_label +
                                                 "' not in node '" + label + "'");
  }

  IndexedKet ket = build_meta_ket(net, cap);
  for (const Node& n : net.nodes) {
    auto it = plan.find(n.label);
    if (it == plan.end()) continue;
    switch (it->second.kind) {
      case NodeOpKind::Bra: ket = bra_node(ket, n.label, it->second.state_label); break;
      case NodeOpKind::KetBra: ket = ketbra_node(ket, n.label, it->second.state_label); break;
      case NodeOpKind::Slash: ket = detail::slash_ket(ket, n.label); break;
      default: break;
    }
  }

  DensityMatrix rho = outer_product(ket);
  for (const Node& n : net.nodes) {
    auto it = plan.find(n.label);
    if (it == plan.end()) continue;
    if (it->second.kind == NodeOpKind::Classicize) rho = classicize_node(rho, n.label);
  }
  for (const Node& n : net.nodes) {
    auto it = plan.find(n.label);
    if (it == plan.end()) continue;
    if (it->second.kind == NodeOpKind::Trace) rho = trace_node(rho, n.label);
  }

  EvalResult result;
  const Cx tr = trace(rho.m);
  result.trace_deviation = std::abs(tr - Cx{1.0, 0.0});
  result.flagged = result.trace_deviation > tol;
  rho.flagged_unnormalized = result.flagged;
  result.rho = std::move(rho);
  return result;
}

}  // namespace qbnet
