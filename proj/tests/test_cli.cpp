// The command layer, driven in-process: exit codes, document output,
// warnings on stderr, and byte determinism.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "qbnet/qbnet.hpp"
#include "support/generators.hpp"

using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
  return std::string(QBNET_TEST_DATA) + "/" + name;
}

// Self-cleaning temp file.
struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& stem, const std::string& content) {
    path = std::filesystem::temp_directory_path() /
           (stem + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    std::ofstream f(path, std::ios::binary);
    f << content;
  }
  ~TempFile() { std::filesystem::remove(path); }
  std::string str() const { return path.string(); }
  static inline int counter = 0;
};

struct RunResult {
  int rc;
  std::string out;
  std::string err;
  json doc;  // parsed from out when it looks like a document
};

template <typename Fn>
RunResult run(Fn&& fn) {
  std::ostringstream out, err;
  RunResult r;
  r.rc = fn(out, err);
  r.out = out.str();
  r.err = err.str();
  if (!r.out.empty() && r.out.front() == '{') r.doc = json::parse(r.out);
  return r;
}

double entry_re(const json& entries, std::size_t r, std::size_t c) {
  return entries[r][c][0].get<double>();
}
double entry_im(const json& entries, std::size_t r, std::size_t c) {
  return entries[r][c][1].get<double>();
}

}  // namespace

TEST_CASE("validate reports success with the node count") {
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_validate(data_path("bell.qbn"), {}, out, err);
  });
  REQUIRE(r.rc == 0);
  REQUIRE(r.out == "ok: net 'bell' with 2 node(s)\n");
  REQUIRE(r.err.empty());
}

TEST_CASE("validate lists violations and exits with 1") {
  TempFile bad("qbnet-badnorm",
               "net broken\n"
               "node a states 0 1\n"
               "amp a 0 | = 0.5 0\n");
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_validate(bad.str(), {}, out, err);
  });
  REQUIRE(r.rc == 1);
  REQUIRE(r.out.find("ColumnNotNormalized") != std::string::npos);
  REQUIRE(r.out.find("node=a") != std::string::npos);
  REQUIRE(r.out.find("deviation") != std::string::npos);
}

TEST_CASE("validate maps parse errors to exit 2 with a located message") {
  TempFile bad("qbnet-parse", "net x\nnode a states 0 1\namp a 0 | = 0.7q 0\n");
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_validate(bad.str(), {}, out, err);
  });
  REQUIRE(r.rc == 2);
  REQUIRE(r.err.find("parse error") != std::string::npos);
  REQUIRE(r.err.find("line 3") != std::string::npos);

  const auto missing = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_validate("/nonexistent/net.qbn", {}, out, err);
  });
  REQUIRE(missing.rc == 2);
}

TEST_CASE("eval emits the meta density when no operations are requested") {
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), {}, {}, out, err);
  });
  REQUIRE(r.rc == 0);
  REQUIRE(r.doc.at("kind") == "density");
  REQUIRE(r.doc.at("dim") == 4);
  REQUIRE(r.doc.at("unnormalized") == false);
  REQUIRE(r.doc.at("trace_deviation").get<double>() < 1e-9);
  const json& e = r.doc.at("entries");
  for (const auto& [row, col] :
       {std::pair<std::size_t, std::size_t>{0, 0}, {0, 3}, {3, 0}, {3, 3}})
    REQUIRE(std::abs(entry_re(e, row, col) - 0.5) < 1e-12);
  REQUIRE(std::abs(entry_re(e, 1, 1)) < 1e-12);
  REQUIRE(std::abs(entry_im(e, 0, 3)) < 1e-12);
}

TEST_CASE("eval applies trace, classicize, and slash per node") {
  SECTION("trace") {
    qbnet::cli::EvalFlags flags;
    flags.trace = {"c"};
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("dim") == 2);
    REQUIRE(r.doc.at("registers")[0].at("id") == "b");
    REQUIRE(std::abs(entry_re(r.doc.at("entries"), 0, 0) - 0.5) < 1e-12);
    REQUIRE(std::abs(entry_re(r.doc.at("entries"), 0, 1)) < 1e-12);
  }
  SECTION("classicize keeps both registers") {
    qbnet::cli::EvalFlags flags;
    flags.classicize = {"c"};
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("dim") == 4);
    const json& e = r.doc.at("entries");
    REQUIRE(std::abs(entry_re(e, 0, 0) - 0.5) < 1e-12);
    REQUIRE(std::abs(entry_re(e, 3, 3) - 0.5) < 1e-12);
    REQUIRE(entry_re(e, 0, 3) == 0.0);
  }
  SECTION("slash sums coherently") {
    qbnet::cli::EvalFlags flags;
    flags.slash = {"c"};
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("dim") == 2);
    const json& e = r.doc.at("entries");
    for (std::size_t row = 0; row < 2; ++row)
      for (std::size_t col = 0; col < 2; ++col)
        REQUIRE(std::abs(entry_re(e, row, col) - 0.5) < 1e-12);
  }
  SECTION("bra projections warn about the shrunken trace") {
    qbnet::cli::EvalFlags flags;
    flags.bra = {{"b", "0"}};
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("unnormalized") == true);
    REQUIRE(r.doc.at("trace_deviation").get<double>() == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(r.err.find("warning: trace deviates from 1 by 0.49") != std::string::npos);
  }
}

TEST_CASE("eval rejects double-booked nodes and unknown nodes") {
  qbnet::cli::EvalFlags flags;
  flags.trace = {"c"};
  flags.classicize = {"c"};
  const auto dup = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
  });
  REQUIRE(dup.rc == 2);
  REQUIRE(dup.err.find("more than one operation flag") != std::string::npos);

  qbnet::cli::EvalFlags ghost;
  ghost.trace = {"zz"};
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), ghost, {}, out, err);
  });
  REQUIRE(r.rc == 1);
  REQUIRE(r.err.find("zz") != std::string::npos);
}

TEST_CASE("eval refuses nets that fail validation") {
  TempFile bad("qbnet-evalbad",
               "net broken\n"
               "node a states 0 1\n"
               "amp a 0 | = 0.5 0\n");
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(bad.str(), {}, {}, out, err);
  });
  REQUIRE(r.rc == 1);
  REQUIRE(r.err.find("ColumnNotNormalized") != std::string::npos);
}

TEST_CASE("channel applies a measurement file to a state file") {
  qbnet::cli::ChannelFlags flags;
  flags.kraus_path = data_path("damping.kraus");
  flags.rho_path = data_path("plus.mat");
  flags.probabilities = true;
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(flags, {}, out, err);
  });
  REQUIRE(r.rc == 0);
  REQUIRE(r.doc.at("kind") == "channel_report");
  REQUIRE(r.doc.at("measurement") == "damping");
  REQUIRE(r.doc.at("completeness_deviation").get<double>() < 1e-9);

  // Damping the balanced state: population flows toward the ground state.
  const json& ch = r.doc.at("channel");
  REQUIRE(std::abs(entry_re(ch.at("entries"), 0, 0) - 0.75) < 1e-12);
  REQUIRE(std::abs(entry_re(ch.at("entries"), 1, 1) - 0.25) < 1e-12);

  const json& probs = r.doc.at("probabilities");
  REQUIRE(probs.at("outcomes") == json::array({"0", "1"}));
  REQUIRE(probs.at("values")[0].get<double>() == Catch::Approx(0.75).margin(1e-12));
  REQUIRE(probs.at("values")[1].get<double>() == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("channel emits dilations and complementary channels") {
  qbnet::cli::ChannelFlags flags;
  flags.kraus_path = data_path("damping.kraus");
  flags.dilate = true;
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(flags, {}, out, err);
  });
  REQUIRE(r.rc == 0);
  const json& d = r.doc.at("dilation");
  REQUIRE(d.at("kind") == "unitary");
  REQUIRE(d.at("dim") == 4);
  REQUIRE(d.at("embedding") == json::array({0, 1}));
  REQUIRE(d.at("registers")[1].at("id") == "mu");

  qbnet::cli::ChannelFlags comp;
  comp.kraus_path = data_path("damping.kraus");
  comp.rho_path = data_path("plus.mat");
  comp.complement = true;
  const auto c = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(comp, {}, out, err);
  });
  REQUIRE(c.rc == 0);
  REQUIRE(c.doc.contains("complement_channel"));
  REQUIRE(std::abs(c.doc.at("complement_channel").at("trace")[0].get<double>() - 1.0) < 1e-9);
}

TEST_CASE("channel flags bad usage and bad measurements") {
  qbnet::cli::ChannelFlags nothing;
  nothing.kraus_path = data_path("damping.kraus");
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(nothing, {}, out, err);
  });
  REQUIRE(r.rc == 2);
  REQUIRE(r.err.find("--rho or --dilate") != std::string::npos);

  TempFile incomplete("qbnet-halfkraus",
                      "measurement half in a=2 out b=2\n"
                      "kraus 0\n"
                      "0.5,0 0,0\n"
                      "0,0 0.5,0\n");
  qbnet::cli::ChannelFlags bad;
  bad.kraus_path = incomplete.str();
  bad.rho_path = data_path("plus.mat");
  const auto b = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(bad, {}, out, err);
  });
  REQUIRE(b.rc == 1);
  REQUIRE(b.err.find("InvalidKraus: measurement 'half'") != std::string::npos);

  qbnet::cli::ChannelFlags mismatched;
  mismatched.kraus_path = data_path("damping.kraus");
  mismatched.rho_path = data_path("halfcol.mat");  // 2x1: not a square state
  const auto m = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_channel(mismatched, {}, out, err);
  });
  REQUIRE(m.rc == 1);
}

TEST_CASE("purify handles ensembles and density matrices") {
  SECTION("from an ensemble file") {
    qbnet::cli::PurifyFlags flags;
    flags.ensemble_path = data_path("mix.ens");
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_purify(flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("kind") == "ket");
    REQUIRE(r.doc.at("dim") == 4);
    REQUIRE(r.doc.at("registers")[1].at("id") == "j");
    REQUIRE(r.doc.at("roundtrip_deviation").get<double>() < 1e-9);
    REQUIRE(r.err.find("roundtrip deviation after tracing 'j'") != std::string::npos);
    // amplitude(x=0, j=1) = sqrt(1/2) / sqrt(2) = 1/2.
    REQUIRE(r.doc.at("amplitudes")[1][0].get<double>() == Catch::Approx(0.5).margin(1e-12));
  }
  SECTION("from a density matrix file") {
    qbnet::cli::PurifyFlags flags;
    flags.rho_path = data_path("threequarter.mat");
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_purify(flags, {}, out, err);
    });
    REQUIRE(r.rc == 0);
    REQUIRE(r.doc.at("roundtrip_deviation").get<double>() < 1e-9);
    // Eigenweights 3/4 and 1/4: amplitudes sqrt(3)/2 and 1/2 up to layout.
    double big = 0.0;
    for (const auto& a : r.doc.at("amplitudes"))
      big = std::max(big, std::abs(a[0].get<double>()));
    REQUIRE(big == Catch::Approx(std::sqrt(0.75)).margin(1e-9));
  }
  SECTION("usage errors") {
    const auto neither = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_purify({}, {}, out, err);
    });
    REQUIRE(neither.rc == 2);

    qbnet::cli::PurifyFlags both;
    both.ensemble_path = data_path("mix.ens");
    both.rho_path = data_path("threequarter.mat");
    const auto b = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_purify(both, {}, out, err);
    });
    REQUIRE(b.rc == 2);
  }
  SECTION("broken ensembles fail with a description") {
    TempFile bad("qbnet-badens",
                 "ensemble lopsided register x=2\n"
                 "item 0.75\n"
                 "1,0 0,0\n"
                 "item 0.75\n"
                 "0,0 1,0\n");
    qbnet::cli::PurifyFlags flags;
    flags.ensemble_path = bad.str();
    const auto r = run([&](std::ostream& out, std::ostream& err) {
      return qbnet::cli::cmd_purify(flags, {}, out, err);
    });
    REQUIRE(r.rc == 1);
    REQUIRE(r.err.find("InvalidEnsemble: ensemble 'lopsided'") != std::string::npos);
  }
}

TEST_CASE("extend-isometry completes matrix files to unitaries") {
  const auto r = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_extend_isometry(data_path("halfcol.mat"), {}, out, err);
  });
  REQUIRE(r.rc == 0);
  REQUIRE(r.doc.at("kind") == "unitary");
  REQUIRE(r.doc.at("dim") == 2);
  const json& e = r.doc.at("entries");
  REQUIRE(entry_re(e, 0, 0) == 0.7071067811865476);  // input column untouched
  REQUIRE(std::abs(entry_re(e, 0, 1) - 0.7071067811865476) < 1e-12);
  REQUIRE(std::abs(entry_re(e, 1, 1) + 0.7071067811865476) < 1e-12);

  TempFile skew("qbnet-skewcols",
                "matrix skew registers a=2\n"
                "1,0 1,0\n"
                "0,0 1,0\n");
  const auto bad = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_extend_isometry(skew.str(), {}, out, err);
  });
  REQUIRE(bad.rc == 1);
  REQUIRE(bad.err.find("NotOrthonormalInput") != std::string::npos);
}

TEST_CASE("documents render identically across runs and into --out files") {
  qbnet::cli::EvalFlags flags;
  flags.trace = {"c"};
  const auto first = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
  });
  const auto second = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, {}, out, err);
  });
  REQUIRE(first.rc == 0);
  REQUIRE(first.out == second.out);

  TempFile sink("qbnet-outfile", "");
  qbnet::cli::RunConfig cfg;
  cfg.out_path = sink.str();
  const auto filed = run([&](std::ostream& out, std::ostream& err) {
    return qbnet::cli::cmd_eval(data_path("bell.qbn"), flags, cfg, out, err);
  });
  REQUIRE(filed.rc == 0);
  REQUIRE(filed.out.empty());
  std::ifstream in(sink.str(), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  REQUIRE(ss.str() == first.out);
}
