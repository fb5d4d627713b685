// core.hpp
// Shared scalar/register types, error kinds, and the joint-index convention
// used across the library: dense row-major storage over an ordered register
// list, leftmost register varying slowest.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbnet {

using Cx = std::complex<double>;

// Default tolerances. Validation checks use default_tol; user-supplied
// isometry columns are accepted at the looser orthonormal_input_tol;
// phase_pivot_tol decides what counts as a nonzero pivot entry.
inline constexpr double default_tol = 1e-9;
inline constexpr double orthonormal_input_tol = 1e-8;
inline constexpr double phase_pivot_tol = 1e-12;
inline constexpr double zero_probability_tol = 1e-12;
inline constexpr std::size_t default_dimension_cap = std::size_t{1} << 20;

enum class ErrorKind {
  OverlappingRegisters,
  UnknownRegister,
  UnknownState,
  DimensionMismatch,
  DimensionCapExceeded,
  ShapeMismatch,
  NotOrthonormalInput,
  NotHermitian,
  NotDecoratedMarginalizer,
  NotDecoratedGrounded,
  ZeroProbabilityOutcome,
  InvalidKraus,
  NotDensityMatrix,
  InvalidEnsemble,
  SyntaxError,
  DuplicateNode,
  UnknownParent,
  DuplicateAmplitudeEntry,
  BadDecoration,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::OverlappingRegisters: return "OverlappingRegisters";
    case ErrorKind::UnknownRegister: return "UnknownRegister";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotOrthonormalInput: return "NotOrthonormalInput";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotDecoratedMarginalizer: return "NotDecoratedMarginalizer";
    case ErrorKind::NotDecoratedGrounded: return "NotDecoratedGrounded";
    case ErrorKind::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
    case ErrorKind::InvalidKraus: return "InvalidKraus";
    case ErrorKind::NotDensityMatrix: return "NotDensityMatrix";
    case ErrorKind::InvalidEnsemble: return "InvalidEnsemble";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::DuplicateNode: return "DuplicateNode";
    case ErrorKind::UnknownParent: return "UnknownParent";
    case ErrorKind::DuplicateAmplitudeEntry: return "DuplicateAmplitudeEntry";
    case ErrorKind::BadDecoration: return "BadDecoration";
  }
  return "UnknownError";
}

struct Error : std::runtime_error {
  ErrorKind kind;
  Error(ErrorKind k, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(k)) + ": " + msg), kind(k) {}
};

// Finite, ordered set of state labels. For composite spaces the labels are
// the row-major Cartesian product of the component label lists (leftmost
// component slowest) and `components` records the factorization; atomic
// spaces leave `components` empty.
struct StateSpace {
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> components;

  std::size_t size() const { return labels.size(); }

  std::size_t component_count() const {
    return components.empty() ? 1 : components.size();
  }

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return i;
    return std::nullopt;
  }

  // Label of component `comp` of state `state`, by row-major decomposition.
  std::string component_label(std::size_t state, std::size_t comp) const {
    if (components.empty()) return labels.at(state);
    std::size_t stride = 1;
    for (std::size_t c = components.size(); c-- > comp + 1;) stride *= components[c].size();
    std::size_t idx = (state / stride) % components[comp].size();
    return components[comp][idx];
  }
};

inline StateSpace make_space(std::vector<std::string> labels) {
  StateSpace s;
  s.labels = std::move(labels);
  return s;
}

// Space with labels "0".."n-1".
inline StateSpace make_range_space(std::size_t n) {
  StateSpace s;
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
  return s;
}

inline std::string tuple_label(const std::vector<std::string>& parts) {
  std::string out = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  out += ')';
  return out;
}

inline StateSpace make_composite_space(std::vector<std::vector<std::string>> comps) {
  StateSpace s;
  s.components = std::move(comps);
  std::size_t total = 1;
  for (const auto& c : s.components) total *= c.size();
  std::vector<std::size_t> digit(s.components.size(), 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<std::string> parts;
    parts.reserve(s.components.size());
    std::size_t rem = i;
    for (std::size_t c = s.components.size(); c-- > 0;) {
      digit[c] = rem % s.components[c].size();
      rem /= s.components[c].size();
    }
    for (std::size_t c = 0; c < s.components.size(); ++c)
      parts.push_back(s.components[c][digit[c]]);
    s.labels.push_back(tuple_label(parts));
  }
  return s;
}

// A named slot in a joint system. Ids must be unique within any register set.
struct Register {
  std::string id;
  StateSpace space;
};

inline std::vector<std::size_t> dims_of(const std::vector<Register>& regs) {
  std::vector<std::size_t> dims;
  dims.reserve(regs.size());
  for (const auto& r : regs) dims.push_back(r.space.size());
  return dims;
}

// Joint dimension with overflow guard; never returns past the guard.
inline std::size_t joint_dim(const std::vector<std::size_t>& dims) {
  std::size_t d = 1;
  for (std::size_t n : dims) {
    if (n != 0 && d > std::numeric_limits<std::size_t>::max() / n)
      throw Error(ErrorKind::DimensionCapExceeded, "joint dimension overflows size_t");
    d *= n;
  }
  return d;
}

inline std::size_t joint_dim(const std::vector<Register>& regs) {
  return joint_dim(dims_of(regs));
}

// Row-major strides: flat = sum(digit[i] * stride[i]), leftmost slowest.
inline std::vector<std::size_t> joint_strides(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
  return strides;
}

inline std::size_t flat_index(const std::vector<std::size_t>& dims,
                              const std::vector<std::size_t>& digits) {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) flat = flat * dims[i] + digits[i];
  return flat;
}

inline void unflatten(const std::vector<std::size_t>& dims, std::size_t flat,
                      std::vector<std::size_t>& digits) {
  digits.resize(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    digits[i] = flat % dims[i];
    flat /= dims[i];
  }
}

inline std::optional<std::size_t> find_register(const std::vector<Register>& regs,
                                                const std::string& id) {
  for (std::size_t i = 0; i < regs.size(); ++i)
    if (regs[i].id == id) return i;
  return std::nullopt;
}

}  // namespace qbnet
