#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "qempc/controller_io.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/simulation.hpp"

namespace fs = std::filesystem;
using namespace qempc;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "qempc");
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qempc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, SynthesizeRoundtrip) {
  const fs::path dir = scratch("synth");
  const Result r = invoke({"synthesize", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("regions: "), std::string::npos);
  const std::string text = slurp(dir / "controller.json");
  const PwaController ctrl = controller_from_json(text);
  EXPECT_EQ(controller_to_json(ctrl), text);
  const Scenario s = double_integrator_benchmark();
  EXPECT_EQ(ctrl.size(), enumerate_regions(condense(s.sys, s.mpc)).size());
}

TEST(Cli, UnconstrainedScenarioHasOneRegion) {
  const fs::path dir = scratch("unconstrained");
  std::ofstream(dir / "scenario.json") << R"({
    "A": [[1, 1], [0, 1]], "B": [[0.5], [1]], "C": [[1, 0]], "horizon": 4,
    "Q": [[1, 0], [0, 1]], "R": [[1]], "P": [[1, 0], [0, 1]]})";
  const Result r =
      invoke({"synthesize", "--config", (dir / "scenario.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_controller(dir / "controller.json").size(), 1u);
}

TEST(Cli, MalformedJsonExitsTwoWithLocation) {
  const fs::path dir = scratch("malformed");
  std::ofstream(dir / "bad.json") << "{\"A\": [[1, 1],";
  const Result r = invoke({"run", "--config", (dir / "bad.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("byte"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({"run", "--no-such-flag"}).code, 2);
  EXPECT_EQ(invoke({"run", "--backend", "rsa", "--out", scratch("usage").string()}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, RunIsDeterministicAndExact) {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  for (const fs::path& dir : {a, b}) {
    const Result r = invoke({"run", "--backend", "qe", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string csv = slurp(a / "trajectory_qe.csv");
  EXPECT_EQ(csv, slurp(b / "trajectory_qe.csv"));

  // u_0 and u_plain_0 are columns 4 and 5.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  double worst = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    worst = std::max(worst, std::abs(std::stod(cols[4]) - std::stod(cols[5])));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Cli, RunFaultExitsOne) {
  const Result r = invoke({"run", "--x0", "4.9,4.9", "--out", scratch("fault").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fault"), std::string::npos);
}

TEST(Cli, EpsilonTargetConflictsAreRejected) {
  const fs::path dir = scratch("eps");
  EXPECT_EQ(invoke({"run", "--epsilon-q", "0.0009765625", "--delta", "4", "--out", dir.string()}).code, 2);
  EXPECT_EQ(invoke({"run", "--backend", "paillier", "--L", "512", "--epsilon-q", "0.0009765625",
                    "--steps", "5", "--out", dir.string()})
                .code,
            0);
}

TEST(Cli, BenchMetricsAreDeterministic) {
  const fs::path a = scratch("bench_a"), b = scratch("bench_b");
  for (const fs::path& dir : {a, b}) {
    const Result r = invoke({"bench", "--steps", "10", "--L", "512", "--sweep", "w=8,12", "--out",
                             dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string csv = slurp(a / "bench_metrics.csv");
  EXPECT_EQ(csv, slurp(b / "bench_metrics.csv"));
  // Header plus 2 sweep points x 4 backends.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_NE(csv.find("qe,w,8,16,8,64,512,2,4,16,3,30,0,"), std::string::npos) << csv;
}

TEST(Cli, AttackIsDeterministic) {
  const fs::path a = scratch("attack_a"), b = scratch("attack_b");
  for (const fs::path& dir : {a, b}) {
    const Result r = invoke({"attack", "--trials", "3", "--L", "256", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string csv = slurp(a / "attack.csv");
  EXPECT_EQ(csv, slurp(b / "attack.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "noise,plaintext,paillier,qe,qe_quantized");
}
