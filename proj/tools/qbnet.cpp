// qbnet: validate nets, contract them into joint states, apply measurements
// and channels, purify mixed states, and complete isometries to unitaries.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "qbnet/qbnet.hpp"

namespace {

bool split_node_state(const std::string& s, std::pair<std::string, std::string>& out) {
  const std::size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= s.size()) return false;
  out = {s.substr(0, eq), s.substr(eq + 1)};
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum network toolkit"};
  app.require_subcommand(1);

  qbnet::cli::RunConfig cfg;
  app.add_option("--tol", cfg.tol, "numerical tolerance for validation checks")
      ->envname("QBNET_TOL")
      ->check(CLI::PositiveNumber);
  app.add_option("--cap", cfg.dimension_cap, "largest joint dimension to contract")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out_path, "write the result document to this file");

  std::string net_path, kraus_path, rho_path, ensemble_path, matrix_path;
  std::vector<std::string> trace_nodes, cl_nodes, sl_nodes, bra_args, ketbra_args;
  qbnet::cli::ChannelFlags channel_flags;

  CLI::App* validate = app.add_subcommand("validate", "check a net file and report violations");
  validate->fallthrough();
  validate->add_option("net", net_path, "net file")->required();

  CLI::App* eval = app.add_subcommand("eval", "contract a net and apply per-node operations");
  eval->fallthrough();
  eval->add_option("net", net_path, "net file")->required();
  eval->add_option("--trace", trace_nodes, "sum a node's register away incoherently");
  eval->add_option("--cl", cl_nodes, "zero cross terms at a node's register");
  eval->add_option("--sl", sl_nodes, "sum a node's register away coherently");
  eval->add_option("--bra", bra_args, "node=state: project onto the state and drop the register");
  eval->add_option("--ketbra", ketbra_args,
                   "node=state: project onto the state and keep the register");

  CLI::App* channel = app.add_subcommand(
      "channel", "validate a measurement file and apply its channel to a state");
  channel->fallthrough();
  channel->add_option("--kraus", kraus_path, "measurement file")->required();
  channel->add_option("--rho", rho_path, "density matrix file to push through the channel");
  channel->add_flag("--complement", channel_flags.complement,
                    "apply the complementary channel instead");
  channel->add_flag("--dilate", channel_flags.dilate, "emit the dilation unitary");
  channel->add_flag("--probs", channel_flags.probabilities, "emit outcome probabilities");

  CLI::App* purify =
      app.add_subcommand("purify", "purify an ensemble or density matrix into a single ket");
  purify->fallthrough();
  purify->add_option("--ensemble", ensemble_path, "ensemble file");
  purify->add_option("--rho", rho_path, "density matrix file");

  CLI::App* extend = app.add_subcommand(
      "extend-isometry", "complete orthonormal columns to a unitary matrix");
  extend->fallthrough();
  extend->add_option("--matrix", matrix_path, "matrix file with orthonormal columns")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // --help exits 0; anything else is a usage error
  }

  if (*validate) return qbnet::cli::cmd_validate(net_path, cfg, std::cout, std::cerr);

  if (*eval) {
    qbnet::cli::EvalFlags flags;
    flags.trace = trace_nodes;
    flags.classicize = cl_nodes;
    flags.slash = sl_nodes;
    for (const auto& raw : bra_args) {
      std::pair<std::string, std::string> kv;
      if (!split_node_state(raw, kv)) {
        std::cerr << "--bra expects node=state, got '" << raw << "'\n";
        return 2;
      }
      flags.bra.push_back(std::move(kv));
    }
    for (const auto& raw : ketbra_args) {
      std::pair<std::string, std::string> kv;
      if (!split_node_state(raw, kv)) {
        std::cerr << "--ketbra expects node=state, got '" << raw << "'\n";
        return 2;
      }
      flags.ketbra.push_back(std::move(kv));
    }
    return qbnet::cli::cmd_eval(net_path, flags, cfg, std::cout, std::cerr);
  }

  if (*channel) {
    channel_flags.kraus_path = kraus_path;
    channel_flags.rho_path = rho_path;
    return qbnet::cli::cmd_channel(channel_flags, cfg, std::cout, std::cerr);
  }

  if (*purify) {
    qbnet::cli::PurifyFlags flags;
    flags.ensemble_path = ensemble_path;
    flags.rho_path = rho_path;
    return qbnet::cli::cmd_purify(flags, cfg, std::cout, std::cerr);
  }

  if (*extend) return qbnet::cli::cmd_extend_isometry(matrix_path, cfg, std::cout, std::cerr);

  return 2;
}
