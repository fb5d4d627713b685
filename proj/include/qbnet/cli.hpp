// cli.hpp
// Command implementations behind the qbnet binary, written against streams
// so tests can drive them in-process. Exit codes: 0 success, 1 domain
// failure (validation violations, numerical preconditions), 2 usage or
// file/parse problems.

#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qbnet/channels.hpp"
#include "qbnet/core.hpp"
#include "qbnet/metastate.hpp"
#include "qbnet/net.hpp"
#include "qbnet/netlang.hpp"
#include "qbnet/state.hpp"

namespace qbnet::cli {

struct RunConfig {
  double tol = default_tol;
  std::size_t dimension_cap = default_dimension_cap;
  std::string out_path;        // empty: write documents to the out stream
  bool deterministic = true;   // reserved; evaluation is already deterministic
};

namespace detail {

inline std::optional<std::string> read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline int write_document(const nlohmann::json& doc, const RunConfig& cfg, std::ostream& out,
                          std::ostream& err) {
  const std::string text = render_document(doc);
  if (cfg.out_path.empty()) {
    out << text;
    return 0;
  }
  std::ofstream f(cfg.out_path, std::ios::binary);
  if (!f) {
    err << "cannot write '" << cfg.out_path << "'\n";
    return 2;
  }
  f << text;
  return f.good() ? 0 : 2;
}

// Maps library exceptions onto exit codes: parse problems are usage-level
// (2), every other named error is a domain failure (1).
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

inline DensityMatrix density_from_matrix_file(const LabeledMatrix& lm) {
  if (lm.m.rows != lm.m.cols || lm.m.rows != joint_dim(lm.registers))
    throw Error(ErrorKind::DimensionMismatch,
                "matrix '" + lm.name + "' is not square on its declared registers");
  DensityMatrix rho;
  rho.registers = lm.registers;
  rho.m = lm.m;
  return rho;
}

}  // namespace detail

// Parses and validates a net; prints one line per violation.
inline int cmd_validate(const std::string& net_path, const RunConfig& cfg, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    auto text = detail::read_text_file(net_path);
    if (!text) {
      err << "cannot read '" << net_path << "'\n";
      return 2;
    }
    const QBNet net = parse_net(*text);
    const std::vector<Violation> violations = validate_net(net, cfg.tol);
    if (violations.empty()) {
      out << "ok: net '" << net.name << "' with " << net.nodes.size() << " node(s)\n";
      return 0;
    }
    for (const auto& v : violations) {
      out << violation_kind_name(v.kind);
      if (!v.node.empty()) out << " node=" << v.node;
      out << ": " << v.detail;
      if (v.deviation > 0.0) out << " (deviation " << format_double(v.deviation) << ")";
      out << "\n";
    }
    return 1;
  });
}

struct EvalFlags {
  std::vector<std::string> trace;
  std::vector<std::string> classicize;
  std::vector<std::string> slash;
  std::vector<std::pair<std::string, std::string>> bra;
  std::vector<std::pair<std::string, std::string>> ketbra;
};

// Contracts the net, applies the requested per-node operations, and emits
// the resulting density document. Naming a node in two flags is a usage
// error.
inline int cmd_eval(const std::string& net_path, const EvalFlags& flags, const RunConfig& cfg,
                    std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    NodeOpPlan plan;
    auto add = [&](const std::string& node, NodeOp op) -> bool {
      if (!plan.emplace(node, std::move(op)).second) {
        err << "node '" << node << "' is named by more than one operation flag\n";
        return false;
      }
      return true;
    };
    for (const auto& n : flags.trace)
      if (!add(n, NodeOp::trace())) return 2;
    for (const auto& n : flags.classicize)
      if (!add(n, NodeOp::classicize())) return 2;
    for (const auto& n : flags.slash)
      if (!add(n, NodeOp::slash())) return 2;
    for (const auto& [n, v] : flags.bra)
      if (!add(n, NodeOp::bra(v))) return 2;
    for (const auto& [n, v] : flags.ketbra)
      if (!add(n, NodeOp::ketbra(v))) return 2;

    auto text = detail::read_text_file(net_path);
    if (!text) {
      err << "cannot read '" << net_path << "'\n";
      return 2;
    }
    const QBNet net = parse_net(*text);
    const std::vector<Violation> violations = validate_net(net, cfg.tol);
    if (!violations.empty()) {
      for (const auto& v : violations)
        err << violation_kind_name(v.kind) << (v.node.empty() ? "" : " node=" + v.node) << ": "
            << v.detail << "\n";
      return 1;
    }

    EvalResult result = evaluate(net, plan, cfg.dimension_cap, cfg.tol);
    if (result.flagged)
      err << "warning: trace deviates from 1 by " << format_double(result.trace_deviation)
          << "\n";
    nlohmann::json doc = density_document(result.rho);
    doc["trace_deviation"] = result.trace_deviation;
    return detail::write_document(doc, cfg, out, err);
  });
}

struct ChannelFlags {
  std::string kraus_path;
  std::string rho_path;  // optional when only --dilate is requested
  bool complement = false;
  bool dilate = false;
  bool probabilities = false;
};

// Validates a measurement file and, depending on the flags, applies its
// channel (or the complementary channel) to a state, reports outcome
// probabilities, and emits the dilation unitary.
inline int cmd_channel(const ChannelFlags& flags, const RunConfig& cfg, std::ostream& out,
                       std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    auto text = detail::read_text_file(flags.kraus_path);
    if (!text) {
      err << "cannot read '" << flags.kraus_path << "'\n";
      return 2;
    }
    const NamedKraus nk = parse_kraus_file(*text);
    const KrausReport rep = validate_kraus(nk.set, cfg.tol);
    if (!rep.ok()) {
      for (const auto& issue : rep.issues)
        err << "InvalidKraus: measurement '" << nk.name << "': " << issue << "\n";
      return 1;
    }

    if (flags.rho_path.empty() && !flags.dilate) {
      err << "nothing to compute: provide --rho or --dilate\n";
      return 2;
    }

    nlohmann::json doc;
    doc["kind"] = "channel_report";
    doc["measurement"] = nk.name;
    doc["completeness_deviation"] = rep.completeness_deviation;

    if (!flags.rho_path.empty()) {
      auto rho_text = detail::read_text_file(flags.rho_path);
      if (!rho_text) {
        err << "cannot read '" << flags.rho_path << "'\n";
        return 2;
      }
      const DensityMatrix rho = detail::density_from_matrix_file(parse_matrix_file(*rho_text));
      const KrausSet& applied = flags.complement ? complementary_channel(nk.set) : nk.set;
      doc[flags.complement ? "complement_channel" : "channel"] =
          density_document(channel_apply(applied, rho));
      if (flags.probabilities)
        doc["probabilities"] = probabilities_document(
            applied.outcome_space.labels, outcome_probabilities(applied, rho));
    }

    if (flags.dilate) {
      const DilationUnitary du = extend_measurement_to_unitary(nk.set);
      doc["dilation"] = unitary_document({du.out_register, du.outcome_register}, du.u);
      doc["dilation"]["embedding"] = du.embedding;
    }
    return detail::write_document(doc, cfg, out, err);
  });
}

struct PurifyFlags {
  std::string ensemble_path;
  std::string rho_path;
};

// Purifies a weighted ket ensemble, or the eigendecomposition ensemble of a
// density matrix, into a single ket with an ancilla register. Always
// verifies that tracing the ancilla recovers the source state and prints
// the deviation.
inline int cmd_purify(const PurifyFlags& flags, const RunConfig& cfg, std::ostream& out,
                      std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const bool have_ensemble = !flags.ensemble_path.empty();
    const bool have_rho = !flags.rho_path.empty();
    if (have_ensemble == have_rho) {
      err << "provide exactly one of --ensemble or --rho\n";
      return 2;
    }

    Ensemble ensemble;
    DensityMatrix reference;
    if (have_ensemble) {
      auto text = detail::read_text_file(flags.ensemble_path);
      if (!text) {
        err << "cannot read '" << flags.ensemble_path << "'\n";
        return 2;
      }
      const NamedEnsemble ne = parse_ensemble_file(*text);
      const std::vector<std::string> issues = validate_ensemble(ne.ensemble, cfg.tol);
      if (!issues.empty()) {
        for (const auto& issue : issues)
          err << "InvalidEnsemble: ensemble '" << ne.name << "': " << issue << "\n";
        return 1;
      }
      ensemble = ne.ensemble;
      reference = ensemble_density(ensemble);
    } else {
      auto text = detail::read_text_file(flags.rho_path);
      if (!text) {
        err << "cannot read '" << flags.rho_path << "'\n";
        return 2;
      }
      reference = detail::density_from_matrix_file(parse_matrix_file(*text));
      ensemble = canonical_ensemble(reference, cfg.tol);
    }

    const IndexedKet ket = purify(ensemble);
    const std::string ancilla_id = ket.registers.back().id;
    const DensityMatrix recovered = partial_trace(outer_product(ket), {ancilla_id});
    const double deviation = max_abs_diff(recovered.m, reference.m);
    err << "roundtrip deviation after tracing '" << ancilla_id
        << "': " << format_double(deviation) << "\n";

    nlohmann::json doc = ket_document(ket);
    doc["roundtrip_deviation"] = deviation;
    return detail::write_document(doc, cfg, out, err);
  });
}

// Completes the orthonormal columns of a matrix file to a full unitary and
// emits it as a unitary document on the file's registers.
inline int cmd_extend_isometry(const std::string& matrix_path, const RunConfig& cfg,
                               std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    auto text = detail::read_text_file(matrix_path);
    if (!text) {
      err << "cannot read '" << matrix_path << "'\n";
      return 2;
    }
    const LabeledMatrix lm = parse_matrix_file(*text);
    const Matrix u = gram_schmidt_extend(lm.m);
    return detail::write_document(unitary_document(lm.registers, u), cfg, out, err);
  });
}

}  // namespace qbnet::cli
