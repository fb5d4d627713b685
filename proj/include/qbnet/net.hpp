// net.hpp
// Directed networks of nodes carrying complex transition-amplitude tables.
// A node's table assigns an amplitude to every (child state, parent state
// tuple) pair; a valid table has unit-norm columns: for each parent tuple,
// the child amplitudes form a unit vector. Root nodes have the single empty
// parent tuple.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qbnet/core.hpp"

namespace qbnet {

enum class DecorationKind { Plain, Marginalizer, Grounded };

// Marginalizer: the node copies one component of its single composite
// parent (a Kronecker delta on that component). Grounded: a root pinned to
// one fixed state (a delta on that label).
struct NodeDecoration {
  DecorationKind kind = DecorationKind::Plain;
  std::size_t component = 0;   // Marginalizer: which parent component is copied
  std::string ground_label;    // Grounded: the pinned state

  static NodeDecoration plain() { return {}; }
  static NodeDecoration marginalizer(std::size_t comp) {
    NodeDecoration d;
    d.kind = DecorationKind::Marginalizer;
    d.component = comp;
    return d;
  }
  static NodeDecoration grounded(std::string label) {
    NodeDecoration d;
    d.kind = DecorationKind::Grounded;
    d.ground_label = std::move(label);
    return d;
  }
};

// Dense amplitude table, child index slowest: amp(child, parent_tuple) at
// amps[child * parent_joint_dim + parent_tuple].
struct TransitionTable {
  StateSpace child_space;
  std::vector<StateSpace> parent_spaces;
  std::vector<Cx> amps;

  std::size_t parent_joint_dim() const {
    std::size_t d = 1;
    for (const auto& s : parent_spaces) d *= s.size();
    return d;
  }

  static TransitionTable zero(StateSpace child, std::vector<StateSpace> parents) {
    TransitionTable t;
    t.child_space = std::move(child);
    t.parent_spaces = std::move(parents);
    t.amps.assign(t.child_space.size() * t.parent_joint_dim(), Cx{0.0, 0.0});
    return t;
  }

  Cx& amp_at(std::size_t child, std::size_t parent_tuple) {
    return amps[child * parent_joint_dim() + parent_tuple];
  }
  const Cx& amp_at(std::size_t child, std::size_t parent_tuple) const {
    return amps[child * parent_joint_dim() + parent_tuple];
  }

  std::size_t parent_tuple_index(const std::vector<std::string>& parent_labels) const {
    if (parent_labels.size() != parent_spaces.size())
      throw Error(ErrorKind::DimensionMismatch, "wrong number of parent labels");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < parent_spaces.size(); ++i) {
      auto idx = parent_spaces[i].index_of(parent_labels[i]);
      if (!idx)
        throw Error(ErrorKind::UnknownState,
                    "state '" + parent_labels[i] + "' not in parent space");
      flat = flat * parent_spaces[i].size() + *idx;
    }
    return flat;
  }

  void set(const std::string& child_label, const std::vector<std::string>& parent_labels, Cx v) {
    auto ci = child_space.index_of(child_label);
    if (!ci) throw Error(ErrorKind::UnknownState, "state '" + child_label + "' not in child space");
    amp_at(*ci, parent_tuple_index(parent_labels)) = v;
  }
};

struct Node {
  std::string label;
  std::vector<std::string> parents;  // labels of earlier-declared nodes
  TransitionTable table;
  NodeDecoration decoration;

  const StateSpace& space() const { return table.child_space; }
};

struct QBNet {
  std::string name;
  std::vector<Node> nodes;  // declaration order; fixes all joint orderings

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].label == label) return i;
    return std::nullopt;
  }

  const Node& node(const std::string& label) const {
    auto i = index_of(label);
    if (!i) throw Error(ErrorKind::UnknownRegister, "no node named '" + label + "'");
    return nodes[*i];
  }

  void set_amp(const std::string& node_label, const std::string& child_label,
               const std::vector<std::string>& parent_labels, Cx v) {
    auto i = index_of(node_label);
    if (!i) throw Error(ErrorKind::UnknownRegister, "no node named '" + node_label + "'");
    nodes[*i].table.set(child_label, parent_labels, v);
  }
};

inline Node make_node(std::string label, StateSpace space, std::vector<std::string> parents,
                      std::vector<StateSpace> parent_spaces,
                      NodeDecoration dec = NodeDecoration::plain()) {
  Node n;
  n.label = std::move(label);
  n.parents = std::move(parents);
  n.table = TransitionTable::zero(std::move(space), std::move(parent_spaces));
  n.decoration = dec;
  return n;
}

// Convenience: resolve parent spaces from nodes already in the net.
inline void add_node(QBNet& net, std::string label, StateSpace space,
                     std::vector<std::string> parents,
                     NodeDecoration dec = NodeDecoration::plain()) {
  std::vector<StateSpace> parent_spaces;
  for (const auto& p : parents) {
    auto i = net.index_of(p);
    if (!i) throw Error(ErrorKind::UnknownParent, "parent '" + p + "' not declared");
    parent_spaces.push_back(net.nodes[*i].space());
  }
  net.nodes.push_back(
      make_node(std::move(label), std::move(space), std::move(parents), std::move(parent_spaces), dec));
}

enum class ViolationKind {
  DuplicateNodeLabel,
  DanglingParent,
  CycleDetected,
  SpaceMismatch,
  ColumnNotNormalized,
  DecorationViolation,
  NonFiniteAmplitude,
};

inline const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::DuplicateNodeLabel: return "DuplicateNodeLabel";
    case ViolationKind::DanglingParent: return "DanglingParent";
    case ViolationKind::CycleDetected: return "CycleDetected";
    case ViolationKind::SpaceMismatch: return "SpaceMismatch";
    case ViolationKind::ColumnNotNormalized: return "ColumnNotNormalized";
    case ViolationKind::DecorationViolation: return "DecorationViolation";
    case ViolationKind::NonFiniteAmplitude: return "NonFiniteAmplitude";
  }
  return "UnknownViolation";
}

struct Violation {
  ViolationKind kind;
  std::string node;    // offending node label (empty for net-level findings)
  std::string detail;  // human-readable specifics, e.g. the parent tuple
  double deviation = 0.0;
};

// Deterministic topological order (lowest declaration index first among
// ready nodes), or nullopt when the parent relation has a cycle. Nodes with
// unresolvable parents are treated as roots here; validate_net reports those
// separately.
inline std::optional<std::vector<std::size_t>> topological_order(const QBNet& net) {
  const std::size_t n = net.nodes.size();
  std::vector<std::vector<std::size_t>> parent_idx(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& p : net.nodes[i].parents)
      if (auto j = net.index_of(p)) parent_idx[i].push_back(*j);

  std::vector<bool> placed(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (order.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      bool ready = true;
      for (std::size_t j : parent_idx[i])
        if (!placed[j]) {
          ready = false;
          break;
        }
      if (ready) {
        placed[i] = true;
        order.push_back(i);
        progressed = true;
      }
    }
    if (!progressed) return std::nullopt;
  }
  return order;
}

namespace detail {

// Exact Kronecker-delta test shared by the decoration checks; tol 0 means
// bitwise 1.0 / 0.0 entries.
inline bool table_is_delta(const TransitionTable& t,
                           const std::vector<std::vector<bool>>& match, double tol) {
  for (std::size_t c = 0; c < t.child_space.size(); ++c)
    for (std::size_t p = 0; p < t.parent_joint_dim(); ++p) {
      const Cx want = match[c][p] ? Cx{1.0, 0.0} : Cx{0.0, 0.0};
      const Cx got = t.amp_at(c, p);
      if (tol == 0.0 ? got != want : std::abs(got - want) > tol) return false;
    }
  return true;
}

inline bool marginalizer_table_ok(const Node& node, double tol) {
  if (node.parents.size() != 1 || node.table.parent_spaces.size() != 1) return false;
  const StateSpace& parent = node.table.parent_spaces[0];
  if (node.decoration.component >= parent.component_count()) return false;
  const auto& comp_labels =
      parent.components.empty() ? parent.labels : parent.components[node.decoration.component];
  if (node.space().labels != comp_labels) return false;
  std::vector<std::vector<bool>> match(node.space().size(),
                                       std::vector<bool>(parent.size(), false));
  for (std::size_t c = 0; c < node.space().size(); ++c)
    for (std::size_t p = 0; p < parent.size(); ++p)
      match[c][p] =
          node.space().labels[c] == parent.component_label(p, node.decoration.component);
  return table_is_delta(node.table, match, tol);
}

inline bool grounded_table_ok(const Node& node, double tol) {
  if (!node.parents.empty() || !node.table.parent_spaces.empty()) return false;
  auto gi = node.space().index_of(node.decoration.ground_label);
  if (!gi) return false;
  std::vector<std::vector<bool>> match(node.space().size(), std::vector<bool>(1, false));
  match[*gi][0] = true;
  return table_is_delta(node.table, match, tol);
}

}  // namespace detail

// Collects every violation rather than stopping at the first: duplicate
// labels, dangling parents, cycles, table-shape mismatches, non-finite
// entries, column norms off unity by more than tol, and decoration tables
// that are not the exact delta they claim to be.
inline std::vector<Violation> validate_net(const QBNet& net, double tol = default_tol) {
  std::vector<Violation> out;

  std::set<std::string> seen;
  for (const auto& n : net.nodes)
    if (!seen.insert(n.label).second)
      out.push_back({ViolationKind::DuplicateNodeLabel, n.label, "label declared more than once", 0.0});

  for (const auto& n : net.nodes) {
    bool shape_ok = n.table.parent_spaces.size() == n.parents.size();
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      auto j = net.index_of(n.parents[i]);
      if (!j) {
        out.push_back({ViolationKind::DanglingParent, n.label,
                       "parent '" + n.parents[i] + "' is not declared", 0.0});
        continue;
      }
      if (i < n.table.parent_spaces.size() &&
          n.table.parent_spaces[i].labels != net.nodes[*j].space().labels) {
        out.push_back({ViolationKind::SpaceMismatch, n.label,
                       "table's space for parent '" + n.parents[i] +
                           "' differs from that node's space",
                       0.0});
        shape_ok = false;
      }
    }
    if (n.table.parent_spaces.size() != n.parents.size()) {
      out.push_back({ViolationKind::SpaceMismatch, n.label,
                     "table lists a different number of parent spaces than the node has parents",
                     0.0});
      shape_ok = false;
    }
    if (n.table.amps.size() != n.space().size() * n.table.parent_joint_dim()) {
      out.push_back({ViolationKind::SpaceMismatch, n.label,
                     "table entry count does not match child size times parent joint size", 0.0});
      shape_ok = false;
    }
    if (!shape_ok) continue;

    bool finite = true;
    for (const Cx& a : n.table.amps)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
        finite = false;
        break;
      }
    if (!finite) {
      out.push_back({ViolationKind::NonFiniteAmplitude, n.label,
                     "table contains a non-finite amplitude", 0.0});
      continue;
    }

    for (std::size_t p = 0; p < n.table.parent_joint_dim(); ++p) {
      double s = 0.0;
      for (std::size_t c = 0; c < n.space().size(); ++c) s += std::norm(n.table.amp_at(c, p));
      const double dev = std::abs(s - 1.0);
      if (dev > tol) {
        std::vector<std::string> tuple;
        std::size_t rem = p;
        for (std::size_t i = n.table.parent_spaces.size(); i-- > 0;) {
          tuple.insert(tuple.begin(),
                       n.table.parent_spaces[i].labels[rem % n.table.parent_spaces[i].size()]);
          rem /= n.table.parent_spaces[i].size();
        }
        out.push_back({ViolationKind::ColumnNotNormalized, n.label,
                       "column " + tuple_label(tuple) + " has squared norm " + std::to_string(s),
                       dev});
      }
    }

    switch (n.decoration.kind) {
      case DecorationKind::Plain:
        break;
      case DecorationKind::Marginalizer:
        if (!detail::marginalizer_table_ok(n, 0.0))
          out.push_back({ViolationKind::DecorationViolation, n.label,
                         "marginalizer is not an exact copy of parent component " +
                             std::to_string(n.decoration.component),
                         0.0});
        break;
      case DecorationKind::Grounded:
        if (!detail::grounded_table_ok(n, 0.0))
          out.push_back({ViolationKind::DecorationViolation, n.label,
                         "grounded node is not an exact point mass on '" +
                             n.decoration.ground_label + "'",
                         0.0});
        break;
    }
  }

  if (!topological_order(net))
    out.push_back({ViolationKind::CycleDetected, "", "parent relation contains a cycle", 0.0});

  return out;
}

// True iff the node's table is exactly the copying delta its decoration
// claims. tol 0 (the default) demands exact 1.0 / 0.0 entries.
inline bool check_marginalizer(const QBNet& net, const std::string& label, double tol = 0.0) {
  const Node& n = net.node(label);
  if (n.decoration.kind != DecorationKind::Marginalizer)
    throw Error(ErrorKind::NotDecoratedMarginalizer,
                "node '" + label + "' is not decorated as a marginalizer");
  return detail::marginalizer_table_ok(n, tol);
}

// True iff the node is a root whose table is exactly the point mass on its
// declared ground label.
inline bool check_grounded(const QBNet& net, const std::string& label) {
  const Node& n = net.node(label);
  if (n.decoration.kind != DecorationKind::Grounded)
    throw Error(ErrorKind::NotDecoratedGrounded,
                "node '" + label + "' is not decorated as grounded");
  return detail::grounded_table_ok(n, 0.0);
}

// True when the table's columns are pairwise orthonormal within tol, i.e.
// the node acts as an isometry from its parent joint space into its own.
inline bool is_isometry_node(const QBNet& net, const std::string& label,
                             double tol = default_tol) {
  const Node& n = net.node(label);
  const std::size_t pd = n.table.parent_joint_dim();
  for (std::size_t p = 0; p < pd; ++p)
    for (std::size_t q = p; q < pd; ++q) {
      Cx g{0.0, 0.0};
      for (std::size_t c = 0; c < n.space().size(); ++c)
        g += std::conj(n.table.amp_at(c, p)) * n.table.amp_at(c, q);
      const Cx want = (p == q) ? Cx{1.0, 0.0} : Cx{0.0, 0.0};
      if (std::abs(g - want) > tol) return false;
    }
  return true;
}

// Injection of the smaller space's basis into the larger one: label-matched
// positions when every small label occurs in the large space, otherwise the
// positional map i -> i. Returns the image index of each small label.
inline std::vector<std::size_t> embed_state_space(const StateSpace& small,
                                                  const StateSpace& large) {
  if (small.size() > large.size())
    throw Error(ErrorKind::DimensionMismatch,
                "cannot embed a space into a smaller one");
  std::vector<std::size_t> map(small.size());
  bool all_found = true;
  for (std::size_t i = 0; i < small.size(); ++i) {
    auto j = large.index_of(small.labels[i]);
    if (!j) {
      all_found = false;
      break;
    }
    map[i] = *j;
  }
  if (!all_found)
    for (std::size_t i = 0; i < small.size(); ++i) map[i] = i;
  return map;
}

}  // namespace qbnet
