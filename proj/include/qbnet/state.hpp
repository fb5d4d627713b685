// state.hpp
// Kets and density matrices carrying explicit register lists. All joint
// indexing is row-major with the leftmost register varying slowest, matching
// the convention in core.hpp.

#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "qbnet/core.hpp"
#include "qbnet/matrix.hpp"

namespace qbnet {

struct IndexedKet {
  std::vector<Register> registers;
  std::vector<Cx> amplitudes;  // size = joint dimension of registers

  std::size_t dim() const { return amplitudes.size(); }

  double norm() const {
    double n2 = 0.0;
    for (const Cx& a : amplitudes) n2 += std::norm(a);
    return std::sqrt(n2);
  }

  static IndexedKet zero(std::vector<Register> regs) {
    IndexedKet k;
    k.registers = std::move(regs);
    k.amplitudes.assign(joint_dim(k.registers), Cx{0.0, 0.0});
    return k;
  }
};

// Basis ket |label> on a single register.
inline IndexedKet basis_ket(const Register& reg, const std::string& label) {
  auto idx = reg.space.index_of(label);
  if (!idx)
    throw Error(ErrorKind::UnknownState,
                "state '" + label + "' not in register '" + reg.id + "'");
  IndexedKet k = IndexedKet::zero({reg});
  k.amplitudes[*idx] = Cx{1.0, 0.0};
  return k;
}

struct DensityMatrix {
  std::vector<Register> registers;
  Matrix m;  // square, side = joint dimension of registers
  // Set by operations that can change the trace away from one (coherent
  // sums); consumers decide whether to renormalize. Never cleared silently.
  bool flagged_unnormalized = false;

  std::size_t dim() const { return m.rows; }

  static DensityMatrix zero(std::vector<Register> regs) {
    DensityMatrix d;
    d.registers = std::move(regs);
    const std::size_t n = joint_dim(d.registers);
    d.m = Matrix(n, n);
    return d;
  }
};

inline DensityMatrix outer_product(const IndexedKet& k) {
  DensityMatrix d;
  d.registers = k.registers;
  const std::size_t n = k.dim();
  d.m = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) d.m.at(r, c) = k.amplitudes[r] * std::conj(k.amplitudes[c]);
  return d;
}

namespace detail {

inline void require_disjoint(const std::vector<Register>& a, const std::vector<Register>& b) {
  for (const auto& ra : a)
    for (const auto& rb : b)
      if (ra.id == rb.id)
        throw Error(ErrorKind::OverlappingRegisters,
                    "register '" + ra.id + "' appears on both sides");
}

}  // namespace detail

// Kronecker product; the left factor's registers come first (and so vary
// slowest in the joint index).
inline IndexedKet tensor_product(const IndexedKet& x, const IndexedKet& y) {
  detail::require_disjoint(x.registers, y.registers);
  IndexedKet out;
  out.registers = x.registers;
  out.registers.insert(out.registers.end(), y.registers.begin(), y.registers.end());
  out.amplitudes.resize(x.dim() * y.dim());
  for (std::size_t i = 0; i < x.dim(); ++i)
    for (std::size_t j = 0; j < y.dim(); ++j)
      out.amplitudes[i * y.dim() + j] = x.amplitudes[i] * y.amplitudes[j];
  return out;
}

inline DensityMatrix tensor_product(const DensityMatrix& x, const DensityMatrix& y) {
  detail::require_disjoint(x.registers, y.registers);
  DensityMatrix out;
  out.registers = x.registers;
  out.registers.insert(out.registers.end(), y.registers.begin(), y.registers.end());
  out.flagged_unnormalized = x.flagged_unnormalized || y.flagged_unnormalized;
  const std::size_t nx = x.dim(), ny = y.dim();
  out.m = Matrix(nx * ny, nx * ny);
  for (std::size_t r1 = 0; r1 < nx; ++r1)
    for (std::size_t r2 = 0; r2 < ny; ++r2)
      for (std::size_t c1 = 0; c1 < nx; ++c1)
        for (std::size_t c2 = 0; c2 < ny; ++c2)
          out.m.at(r1 * ny + r2, c1 * ny + c2) = x.m.at(r1, c1) * y.m.at(r2, c2);
  return out;
}

// Traces out the named registers; surviving registers keep their relative
// order. Tracing everything leaves a 1x1 matrix holding the full trace.
// Summation runs in ascending traced-index order, so results are
// reproducible bit for bit.
inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   const std::vector<std::string>& over) {
  std::set<std::size_t> traced;
  for (const auto& id : over) {
    auto pos = find_register(rho.registers, id);
    if (!pos) throw Error(ErrorKind::UnknownRegister, "no register named '" + id + "'");
    traced.insert(*pos);
  }

  const std::vector<std::size_t> dims = dims_of(rho.registers);
  const std::vector<std::size_t> strides = joint_strides(dims);

  std::vector<Register> kept_regs;
  std::vector<std::size_t> kept_pos, traced_pos;
  for (std::size_t i = 0; i < rho.registers.size(); ++i) {
    if (traced.count(i)) {
      traced_pos.push_back(i);
    } else {
      kept_pos.push_back(i);
      kept_regs.push_back(rho.registers[i]);
    }
  }

  // Flat-offset tables for every kept / traced sub-index combination.
  auto offsets_for = [&](const std::vector<std::size_t>& positions) {
    std::vector<std::size_t> sub_dims;
    for (std::size_t p : positions) sub_dims.push_back(dims[p]);
    const std::size_t count = joint_dim(sub_dims);
    std::vector<std::size_t> offsets(count, 0);
    std::vector<std::size_t> digits;
    for (std::size_t i = 0; i < count; ++i) {
      unflatten(sub_dims, i, digits);
      std::size_t off = 0;
      for (std::size_t d = 0; d < positions.size(); ++d) off += digits[d] * strides[positions[d]];
      offsets[i] = off;
    }
    return offsets;
  };
  const std::vector<std::size_t> kept_off = offsets_for(kept_pos);
  const std::vector<std::size_t> traced_off = offsets_for(traced_pos);

  DensityMatrix out;
  out.registers = std::move(kept_regs);
  out.flagged_unnormalized = rho.flagged_unnormalized;
  out.m = Matrix(kept_off.size(), kept_off.size());
  for (std::size_t r = 0; r < kept_off.size(); ++r)
    for (std::size_t c = 0; c < kept_off.size(); ++c) {
      Cx sum{0.0, 0.0};
      for (std::size_t t = 0; t < traced_off.size(); ++t)
        sum += rho.m.at(kept_off[r] + traced_off[t], kept_off[c] + traced_off[t]);
      out.m.at(r, c) = sum;
    }
  return out;
}

}  // namespace qbnet
