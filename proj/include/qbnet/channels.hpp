// channels.hpp
// Measurements as Kraus operator sets, the induced probability rules and
// channels, positive-operator resolutions of the identity, unitary dilation
// of a measurement onto a larger system with an outcome ancilla, the
// complementary channel read off that dilation, and purification of mixed
// states into ensembles of kets.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qbnet/core.hpp"
#include "qbnet/matrix.hpp"
#include "qbnet/net.hpp"
#include "qbnet/state.hpp"

namespace qbnet {

// One operator per outcome, each mapping the in register's space into the
// out register's space. A complete set satisfies sum_mu K_mu^dag K_mu = I.
struct KrausSet {
  StateSpace outcome_space;
  Register in_register;
  Register out_register;
  std::vector<Matrix> operators;

  std::size_t n_in() const { return in_register.space.size(); }
  std::size_t n_out() const { return out_register.space.size(); }
  std::size_t n_outcomes() const { return outcome_space.size(); }
};

struct KrausReport {
  std::vector<std::string> issues;
  double completeness_deviation = 0.0;
  bool ok() const { return issues.empty(); }
};

// Checks shape consistency, the dimension bound n_in <= n_out * n_outcomes
// (anything larger cannot satisfy completeness), and completeness within
// tol. All findings are collected, none is fatal.
inline KrausReport validate_kraus(const KrausSet& ks, double tol = default_tol) {
  KrausReport rep;
  if (ks.operators.empty()) rep.issues.push_back("no operators");
  if (ks.operators.size() != ks.n_outcomes())
    rep.issues.push_back("operator count differs from outcome count");
  for (std::size_t i = 0; i < ks.operators.size(); ++i)
    if (ks.operators[i].rows != ks.n_out() || ks.operators[i].cols != ks.n_in())
      rep.issues.push_back("operator " + std::to_string(i) + " is not " +
                           std::to_string(ks.n_out()) + "x" + std::to_string(ks.n_in()));
  if (!rep.issues.empty()) return rep;

  if (ks.n_in() > ks.n_out() * ks.n_outcomes())
    rep.issues.push_back("input dimension exceeds output dimension times outcome count");

  Matrix sum(ks.n_in(), ks.n_in());
  for (const Matrix& k : ks.operators) sum = sum + dagger(k) * k;
  rep.completeness_deviation = max_abs_diff(sum, Matrix::identity(ks.n_in()));
  if (rep.completeness_deviation > tol)
    rep.issues.push_back("operators do not resolve the identity (deviation " +
                         std::to_string(rep.completeness_deviation) + ")");
  return rep;
}

struct MeasurementOutcome {
  DensityMatrix state;  // on the out register
  double probability;
};

inline std::size_t outcome_index(const KrausSet& ks, const std::string& outcome) {
  auto idx = ks.outcome_space.index_of(outcome);
  if (!idx) throw Error(ErrorKind::UnknownState, "no outcome named '" + outcome + "'");
  return *idx;
}

// Probability of each outcome: tr(K^dag K rho), in outcome order.
inline std::vector<double> outcome_probabilities(const KrausSet& ks, const DensityMatrix& rho) {
  if (rho.dim() != ks.n_in())
    throw Error(ErrorKind::DimensionMismatch, "state dimension differs from the in register");
  std::vector<double> probs;
  probs.reserve(ks.operators.size());
  for (const Matrix& k : ks.operators) probs.push_back(trace(dagger(k) * k * rho.m).real());
  return probs;
}

// State after observing one outcome: K rho K^dag / P(outcome). Outcomes
// with probability below zero_probability_tol are refused rather than
// divided by.
inline MeasurementOutcome measurement_superop(const KrausSet& ks, const std::string& outcome,
                                              const DensityMatrix& rho) {
  if (rho.dim() != ks.n_in())
    throw Error(ErrorKind::DimensionMismatch, "state dimension differs from the in register");
  const Matrix& k = ks.operators[outcome_index(ks, outcome)];
  const double p = trace(dagger(k) * k * rho.m).real();
  if (p < zero_probability_tol)
    throw Error(ErrorKind::ZeroProbabilityOutcome,
                "outcome '" + outcome + "' has probability " + std::to_string(p));
  MeasurementOutcome out;
  out.probability = p;
  out.state.registers = {ks.out_register};
  out.state.m = (Cx{1.0 / p, 0.0}) * (k * rho.m * dagger(k));
  return out;
}

// True when the set is a von Neumann measurement: square Hermitian
// operators that are mutually annihilating idempotents resolving the
// identity, all within tol.
inline bool is_von_neumann(const KrausSet& ks, double tol = default_tol) {
  if (ks.n_in() != ks.n_out()) return false;
  const std::size_t n = ks.n_in();
  for (const Matrix& k : ks.operators) {
    if (k.rows != n || k.cols != n) return false;
    if (max_abs_diff(k, dagger(k)) > tol) return false;
  }
  Matrix sum(n, n);
  for (const Matrix& k : ks.operators) sum = sum + k;
  if (max_abs_diff(sum, Matrix::identity(n)) > tol) return false;
  for (std::size_t i = 0; i < ks.operators.size(); ++i)
    for (std::size_t j = 0; j < ks.operators.size(); ++j) {
      const Matrix prod = ks.operators[i] * ks.operators[j];
      const double dev =
          (i == j) ? max_abs_diff(prod, ks.operators[i]) : max_abs(prod);
      if (dev > tol) return false;
    }
  return true;
}

enum class BuiltinMeasurement { Tracing, Dephasing, ClassicalComm, CoherentComm };

// Standard measurements on a given space, one outcome per basis state
// except for the coherent case, which has a single outcome. Every returned
// set resolves the identity exactly.
inline KrausSet builtin_measurement(BuiltinMeasurement kind, const StateSpace& space) {
  const std::size_t n = space.size();
  KrausSet ks;
  ks.in_register = {"a", space};
  switch (kind) {
    case BuiltinMeasurement::Tracing: {
      // K_a = <a| : collapse into a one-state register, outcome per state.
      ks.out_register = {"b", make_space({"0"})};
      ks.outcome_space = space;
      for (std::size_t i = 0; i < n; ++i) {
        Matrix k(1, n);
        k.at(0, i) = Cx{1.0, 0.0};
        ks.operators.push_back(std::move(k));
      }
      break;
    }
    case BuiltinMeasurement::Dephasing: {
      // K_a = |a><a| on the same register: kills off-diagonal terms.
      ks.out_register = {"a", space};
      ks.outcome_space = space;
      for (std::size_t i = 0; i < n; ++i) {
        Matrix k(n, n);
        k.at(i, i) = Cx{1.0, 0.0};
        ks.operators.push_back(std::move(k));
      }
      break;
    }
    case BuiltinMeasurement::ClassicalComm: {
      // K_a = |a>_b <a|_a : copy the observed state into a fresh register.
      ks.out_register = {"b", space};
      ks.outcome_space = space;
      for (std::size_t i = 0; i < n; ++i) {
        Matrix k(n, n);
        k.at(i, i) = Cx{1.0, 0.0};
        ks.operators.push_back(std::move(k));
      }
      break;
    }
    case BuiltinMeasurement::CoherentComm: {
      // Single outcome, K = sum_a |a>_b <a|_a : move the state untouched.
      ks.out_register = {"b", space};
      ks.outcome_space = make_space({"0"});
      ks.operators.push_back(Matrix::identity(n));
      break;
    }
  }
  return ks;
}

// The channel obtained by forgetting the outcome: sum_mu K rho K^dag.
inline DensityMatrix channel_apply(const KrausSet& ks, const DensityMatrix& rho) {
  if (rho.dim() != ks.n_in())
    throw Error(ErrorKind::DimensionMismatch, "state dimension differs from the in register");
  DensityMatrix out;
  out.registers = {ks.out_register};
  out.m = Matrix(ks.n_out(), ks.n_out());
  for (const Matrix& k : ks.operators) out.m = out.m + k * rho.m * dagger(k);
  return out;
}

// Positive-operator resolution of the identity: outcome statistics without
// post-measurement states.
struct Rinno {
  StateSpace outcome_space;
  Register in_register;
  std::vector<Matrix> elements;  // n_in x n_in, PSD, summing to I
};

inline Rinno rinno_from_kraus(const KrausSet& ks) {
  Rinno r;
  r.outcome_space = ks.outcome_space;
  r.in_register = ks.in_register;
  r.elements.reserve(ks.operators.size());
  for (const Matrix& k : ks.operators) r.elements.push_back(dagger(k) * k);
  return r;
}

struct RinnoReport {
  std::vector<std::string> issues;
  double completeness_deviation = 0.0;
  bool ok() const { return issues.empty(); }
};

inline RinnoReport validate_rinno(const Rinno& r, double tol = default_tol) {
  RinnoReport rep;
  if (r.elements.empty()) rep.issues.push_back("no elements");
  if (r.elements.size() != r.outcome_space.size())
    rep.issues.push_back("element count differs from outcome count");
  const std::size_t n = r.in_register.space.size();
  for (std::size_t i = 0; i < r.elements.size(); ++i) {
    const Matrix& e = r.elements[i];
    if (e.rows != n || e.cols != n) {
      rep.issues.push_back("element " + std::to_string(i) + " is not " + std::to_string(n) +
                           "x" + std::to_string(n));
      continue;
    }
    if (!is_hermitian(e, tol)) {
      rep.issues.push_back("element " + std::to_string(i) + " is not Hermitian");
      continue;
    }
    if (!is_psd(e, tol))
      rep.issues.push_back("element " + std::to_string(i) + " has a negative eigenvalue");
  }
  if (!rep.issues.empty()) return rep;
  Matrix sum(n, n);
  for (const Matrix& e : r.elements) sum = sum + e;
  rep.completeness_deviation = max_abs_diff(sum, Matrix::identity(n));
  if (rep.completeness_deviation > tol)
    rep.issues.push_back("elements do not resolve the identity (deviation " +
                         std::to_string(rep.completeness_deviation) + ")");
  return rep;
}

inline std::vector<double> rinno_probabilities(const Rinno& r, const DensityMatrix& rho) {
  if (rho.dim() != r.in_register.space.size())
    throw Error(ErrorKind::DimensionMismatch, "state dimension differs from the in register");
  std::vector<double> probs;
  probs.reserve(r.elements.size());
  for (const Matrix& e : r.elements) probs.push_back(trace(e * rho.m).real());
  return probs;
}

// Unitary on out (x) outcome whose (b,mu | a,first-outcome) entries
// reproduce <b|K_mu|a>. Joint indices run with the out register slowest and
// the outcome register fastest; `embedding` maps in-space indices to
// out-space indices.
struct DilationUnitary {
  Register out_register;
  Register outcome_register;
  std::vector<std::size_t> embedding;
  Matrix u;
};

// Builds the dilation: the measurement's columns are written bit-exact at
// column (embedding[a], first outcome), and the remaining columns are the
// deterministic Gram-Schmidt completion, placed into the free column
// positions in increasing index order.
inline DilationUnitary extend_measurement_to_unitary(const KrausSet& ks) {
  const KrausReport rep = validate_kraus(ks);
  if (!rep.ok()) throw Error(ErrorKind::InvalidKraus, rep.issues.front());
  if (ks.n_in() > ks.n_out())
    throw Error(ErrorKind::InvalidKraus,
                "input dimension exceeds output dimension; the input slot cannot be embedded");

  DilationUnitary du;
  du.out_register = ks.out_register;
  du.outcome_register = {ks.out_register.id == "mu" ? "mu_anc" : "mu", ks.outcome_space};
  du.embedding = embed_state_space(ks.in_register.space, ks.out_register.space);

  const std::size_t n_mu = ks.n_outcomes();
  const std::size_t n = ks.n_out() * n_mu;

  Matrix cols(n, ks.n_in());
  for (std::size_t a = 0; a < ks.n_in(); ++a)
    for (std::size_t mu = 0; mu < n_mu; ++mu)
      for (std::size_t b = 0; b < ks.n_out(); ++b)
        cols.at(b * n_mu + mu, a) = ks.operators[mu].at(b, a);

  const Matrix full = gram_schmidt_extend(cols);

  std::vector<bool> taken(n, false);
  du.u = Matrix(n, n);
  for (std::size_t a = 0; a < ks.n_in(); ++a) {
    const std::size_t target = du.embedding[a] * n_mu;  // first outcome index is 0
    taken[target] = true;
    for (std::size_t r = 0; r < n; ++r) du.u.at(r, target) = full.at(r, a);
  }
  std::size_t next = ks.n_in();
  for (std::size_t c = 0; c < n; ++c) {
    if (taken[c]) continue;
    for (std::size_t r = 0; r < n; ++r) du.u.at(r, c) = full.at(r, next);
    ++next;
  }
  return du;
}

// Runs the dilation as a channel: embed rho into the out space, adjoin the
// outcome ancilla in its first state, conjugate by U, trace the ancilla.
inline DensityMatrix stinespring_apply(const DilationUnitary& du, const DensityMatrix& rho) {
  const std::size_t n_in = du.embedding.size();
  if (rho.dim() != n_in)
    throw Error(ErrorKind::DimensionMismatch, "state dimension differs from the embedded slot");
  const std::size_t n_mu = du.outcome_register.space.size();
  const std::size_t n = du.u.rows;

  Matrix sigma(n, n);
  for (std::size_t a = 0; a < n_in; ++a)
    for (std::size_t b = 0; b < n_in; ++b)
      sigma.at(du.embedding[a] * n_mu, du.embedding[b] * n_mu) = rho.m.at(a, b);

  const Matrix evolved = du.u * sigma * dagger(du.u);

  DensityMatrix out;
  out.registers = {du.out_register};
  const std::size_t n_out = du.out_register.space.size();
  out.m = Matrix(n_out, n_out);
  for (std::size_t r = 0; r < n_out; ++r)
    for (std::size_t c = 0; c < n_out; ++c) {
      Cx sum{0.0, 0.0};
      for (std::size_t mu = 0; mu < n_mu; ++mu) sum += evolved.at(r * n_mu + mu, c * n_mu + mu);
      out.m.at(r, c) = sum;
    }
  return out;
}

// The channel into the environment: one operator per out state b, acting on
// the outcome space, L_b[mu, mu'] = U[(b,mu), (a0, mu')] where a0 is the
// embedded first in-state. Unitarity of the dilation makes the family
// complete.
inline KrausSet complementary_channel(const KrausSet& ks) {
  const DilationUnitary du = extend_measurement_to_unitary(ks);
  const std::size_t n_mu = ks.n_outcomes();
  const std::size_t a0 = du.embedding[0];

  KrausSet comp;
  comp.outcome_space = ks.out_register.space;
  comp.in_register = {du.outcome_register.id, ks.outcome_space};
  comp.out_register = comp.in_register;
  for (std::size_t b = 0; b < ks.n_out(); ++b) {
    Matrix l(n_mu, n_mu);
    for (std::size_t mu = 0; mu < n_mu; ++mu)
      for (std::size_t mup = 0; mup < n_mu; ++mup)
        l.at(mu, mup) = du.u.at(b * n_mu + mu, a0 * n_mu + mup);
    comp.operators.push_back(std::move(l));
  }
  return comp;
}

// Weighted ensemble of kets on a common register.
struct EnsembleItem {
  double weight;
  IndexedKet ket;
};

struct Ensemble {
  std::vector<EnsembleItem> items;
};

inline std::vector<std::string> validate_ensemble(const Ensemble& e, double tol = default_tol) {
  std::vector<std::string> issues;
  if (e.items.empty()) {
    issues.push_back("ensemble has no items");
    return issues;
  }
  const auto& first_regs = e.items.front().ket.registers;
  if (first_regs.size() != 1) issues.push_back("ensemble kets must live on a single register");
  double wsum = 0.0;
  for (std::size_t i = 0; i < e.items.size(); ++i) {
    const auto& item = e.items[i];
    if (item.weight < 0.0)
      issues.push_back("item " + std::to_string(i) + " has a negative weight");
    wsum += item.weight;
    if (item.ket.registers.size() != first_regs.size() ||
        (item.ket.registers.size() == 1 &&
         (item.ket.registers[0].id != first_regs[0].id ||
          item.ket.registers[0].space.labels != first_regs[0].space.labels)))
      issues.push_back("item " + std::to_string(i) + " lives on a different register");
    else if (std::abs(item.ket.norm() - 1.0) > tol)
      issues.push_back("item " + std::to_string(i) + " is not normalized");
  }
  if (std::abs(wsum - 1.0) > tol)
    issues.push_back("weights sum to " + std::to_string(wsum) + " rather than 1");
  return issues;
}

// The mixed state the ensemble describes: sum_j w_j |psi_j><psi_j|.
inline DensityMatrix ensemble_density(const Ensemble& e) {
  if (e.items.empty()) throw Error(ErrorKind::InvalidEnsemble, "ensemble has no items");
  DensityMatrix out;
  out.registers = e.items.front().ket.registers;
  const std::size_t n = e.items.front().ket.dim();
  out.m = Matrix(n, n);
  for (const auto& item : e.items) {
    if (item.ket.dim() != n)
      throw Error(ErrorKind::InvalidEnsemble, "items live on different spaces");
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        out.m.at(r, c) += item.weight * item.ket.amplitudes[r] * std::conj(item.ket.amplitudes[c]);
  }
  return out;
}

// Pure state on (system, ancilla) whose ancilla-traced reduction is the
// ensemble's density: amplitude(x, j) = sqrt(w_j) <x|psi_j>, with the
// system index slowest and one ancilla label per item.
inline IndexedKet purify(const Ensemble& e) {
  if (e.items.empty()) throw Error(ErrorKind::InvalidEnsemble, "ensemble has no items");
  const Register& sys = [&]() -> const Register& {
    const auto& regs = e.items.front().ket.registers;
    if (regs.size() != 1)
      throw Error(ErrorKind::InvalidEnsemble, "ensemble kets must live on a single register");
    return regs[0];
  }();
  const std::size_t n = sys.space.size();
  const std::size_t k = e.items.size();

  Register anc{sys.id == "j" ? "j_anc" : "j", make_range_space(k)};
  IndexedKet out = IndexedKet::zero({sys, anc});
  for (std::size_t j = 0; j < k; ++j) {
    const auto& item = e.items[j];
    if (item.weight < 0.0) throw Error(ErrorKind::InvalidEnsemble, "negative weight");
    if (item.ket.dim() != n)
      throw Error(ErrorKind::InvalidEnsemble, "items live on different spaces");
    const double root = std::sqrt(item.weight);
    for (std::size_t x = 0; x < n; ++x)
      out.amplitudes[x * k + j] = root * item.ket.amplitudes[x];
  }
  return out;
}

// Eigendecomposition ensemble of a density matrix: weights are eigenvalues
// in descending order (those below 1e-12 dropped), kets are the matching
// eigenvectors with phases fixed so each one's first entry above the pivot
// tolerance is real and non-negative. Reconstruction, not the individual
// vectors, is the contract: sum_j w_j |v_j><v_j| equals the input up to the
// dropped tail.
inline Ensemble canonical_ensemble(const DensityMatrix& rho, double tol = default_tol) {
  if (rho.registers.size() != 1)
    throw Error(ErrorKind::NotDensityMatrix, "expected a state on a single register");
  if (!is_hermitian(rho.m, tol))
    throw Error(ErrorKind::NotDensityMatrix, "matrix is not Hermitian");
  if (std::abs(trace(rho.m).real() - 1.0) > tol || std::abs(trace(rho.m).imag()) > tol)
    throw Error(ErrorKind::NotDensityMatrix, "trace differs from 1");
  const EigenSystem sys = hermitian_eigensystem(rho.m, tol);
  if (!sys.values.empty() && sys.values.front() < -tol)
    throw Error(ErrorKind::NotDensityMatrix, "matrix has a negative eigenvalue");

  Ensemble out;
  const std::size_t n = rho.dim();
  for (std::size_t i = n; i-- > 0;) {  // descending eigenvalues
    const double w = sys.values[i];
    if (w < zero_probability_tol) continue;
    IndexedKet v = IndexedKet::zero({rho.registers[0]});
    for (std::size_t r = 0; r < n; ++r) v.amplitudes[r] = sys.vectors.at(r, i);
    for (std::size_t r = 0; r < n; ++r)
      if (std::abs(v.amplitudes[r]) > phase_pivot_tol) {
        const Cx phase = std::conj(v.amplitudes[r]) / std::abs(v.amplitudes[r]);
        for (Cx& x : v.amplitudes) x *= phase;
        break;
      }
    out.items.push_back({w, std::move(v)});
  }
  return out;
}

}  // namespace qbnet
