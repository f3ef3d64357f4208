#include <gtest/gtest.h>

#include <sstream>

#include "qempc/errors.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/paillier.hpp"
#include "qempc/simulation.hpp"

using namespace qempc;

namespace {

const Scenario& bench() {
  static const Scenario s = double_integrator_benchmark();
  return s;
}

const PwaController& bench_ctrl() {
  static const PwaController ctrl = enumerate_regions(condense(bench().sys, bench().mpc));
  return ctrl;
}

Trajectory run(BackendKind kind, const Vector& x0, std::size_t steps, BackendConfig cfg = {}) {
  auto backend = make_backend(kind, bench_ctrl(), cfg);
  return run_closed_loop(bench().sys, bench_ctrl(), *backend, x0, steps);
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(StepPlant, Examples) {
  const LtiSystem& sys = bench().sys;
  EXPECT_EQ(step_plant(sys, vec2(0, 1), Vector::Zero(1)), vec2(1, 1));
  LtiSystem id{Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Identity(2, 2)};
  EXPECT_EQ(step_plant(id, vec2(3, -4), Vector::Zero(1)), vec2(3, -4));
  const Vector x1 = vec2(0.3, -1.1), x2 = vec2(2.0, 0.25);
  const Vector u1 = Vector::Constant(1, 0.4), u2 = Vector::Constant(1, -0.9);
  EXPECT_NEAR((step_plant(sys, x1 + x2, u1 + u2) -
               (step_plant(sys, x1, u1) + step_plant(sys, x2, u2) -
                step_plant(sys, Vector::Zero(2), Vector::Zero(1))))
                  .norm(),
              0.0, 1e-14);
  EXPECT_THROW(step_plant(sys, Vector::Zero(3), Vector::Zero(1)), InvalidProblem);
}

TEST(ClosedLoop, QeMatchesPlaintext) {
  for (const Vector& x0 : bench().initial_states) {
    const Trajectory t = run(BackendKind::kQe, x0, 60);
    ASSERT_FALSE(t.fault.has_value());
    ASSERT_EQ(t.records.size(), 60u);
    const Mismatch mm = input_mismatch(t);
    EXPECT_LE(mm.max, 1e-9);
    EXPECT_LE(mm.mean, 1e-10);
  }
}

TEST(ClosedLoop, InputConstraintsHold) {
  for (BackendKind kind : {BackendKind::kPlaintext, BackendKind::kQe}) {
    for (const Vector& x0 : bench().initial_states) {
      for (const auto& rec : run(kind, x0, 60).records) {
        EXPECT_LE(rec.u.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
        EXPECT_LE(rec.x.cwiseAbs().maxCoeff(), 5.0 + 1e-9);
      }
    }
  }
}

TEST(ClosedLoop, OriginIsAnEquilibrium) {
  const auto sigma0 = locate_region(bench_ctrl(), Vector::Zero(2));
  ASSERT_TRUE(sigma0.has_value());
  ASSERT_EQ(bench_ctrl().regions[*sigma0].b.norm(), 0.0);
  const Trajectory t = run(BackendKind::kQe, Vector::Zero(2), 10);
  for (const auto& rec : t.records) {
    EXPECT_EQ(rec.x, Vector::Zero(2));
    EXPECT_EQ(rec.u, Vector::Zero(1));
  }
  EXPECT_EQ(tracking_rmse(t), 0.0);
}

TEST(ClosedLoop, Deterministic) {
  BackendConfig cfg;
  cfg.w = 12;
  for (BackendKind kind : {BackendKind::kQe, BackendKind::kQeQuantized}) {
    const Trajectory a = run(kind, bench().initial_states[1], 30, cfg);
    const Trajectory b = run(kind, bench().initial_states[1], 30, cfg);
    std::ostringstream sa, sb;
    write_trajectory_csv(a, bench().sys, sa);
    write_trajectory_csv(b, bench().sys, sb);
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST(ClosedLoop, PaillierWithinFixedPointBudget) {
  BackendConfig cfg;
  cfg.modulus_bits = 512;
  for (int delta : {6, 10, 16}) {
    cfg.delta = delta;
    const Trajectory t = run(BackendKind::kPaillier, bench().initial_states[0], 30, cfg);
    ASSERT_FALSE(t.fault.has_value());
    double k_max = 0;
    for (const auto& r : bench_ctrl().regions) k_max = std::max(k_max, r.k.cwiseAbs().maxCoeff());
    he::FixedPointCodec codec;
    codec.delta = delta;
    double x_max = 0;
    for (const auto& rec : t.records) x_max = std::max(x_max, rec.x.cwiseAbs().maxCoeff());
    const double budget = he::fixed_point_budget(2, x_max, k_max, codec);
    EXPECT_LE(input_mismatch(t).max, budget) << "delta=" << delta;
  }
}

TEST(ClosedLoop, QuantizedErrorShrinksWithWordWidth) {
  // Deviation of the quantized loop's outputs from the exact loop's, averaged
  // over quantizer seeds. Small keys and states keep every ciphertext inside
  // the word range so only rounding noise remains.
  const Vector x0 = vec2(0.3, -0.2);
  const Trajectory exact = run(BackendKind::kPlaintext, x0, 40);
  double prev = std::numeric_limits<double>::infinity();
  for (unsigned w : {4u, 8u, 12u, 16u}) {
    double acc = 0;
    std::uint64_t saturations = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      BackendConfig cfg;
      cfg.w_b = 4;
      cfg.w = w;
      cfg.seed_quant = 100 + seed;
      cfg.seed_keys = 200 + seed;
      const Trajectory t = run(BackendKind::kQeQuantized, x0, 40, cfg);
      ASSERT_FALSE(t.fault.has_value());
      double sq = 0;
      for (std::size_t k = 0; k < t.records.size(); ++k) {
        sq += (t.records[k].y - exact.records[k].y).squaredNorm();
        saturations += t.records[k].metrics.saturations;
      }
      acc += std::sqrt(sq / static_cast<double>(t.records.size()));
    }
    // At w = 4 the rounding error alone pushes the state far enough that some
    // ciphertexts clamp; from w = 8 on nothing should.
    if (w >= 8) EXPECT_EQ(saturations, 0u) << "w=" << w;
    EXPECT_LE(acc, prev) << "w=" << w;
    prev = acc;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(ClosedLoop, FaultIsRecordedNotThrown) {
  const Trajectory t = run(BackendKind::kQe, vec2(4.9, 4.9), 10);
  ASSERT_TRUE(t.fault.has_value());
  EXPECT_TRUE(t.records.empty());
  std::ostringstream out;
  write_trajectory_csv(t, bench().sys, out);
  EXPECT_NE(out.str().find("outside every critical region"), std::string::npos);
}

TEST(Metrics, RmseAndMismatchIdentities) {
  Trajectory t;
  for (int k = 0; k < 3; ++k) {
    TrajectoryRecord r;
    r.k = static_cast<std::uint64_t>(k);
    r.y = Vector::Constant(1, 2.0);
    r.r = Vector::Constant(1, 2.0);
    r.u = Vector::Constant(1, 0.5);
    r.u_plain = r.u;
    t.records.push_back(r);
  }
  EXPECT_EQ(tracking_rmse(t), 0.0);
  EXPECT_EQ(input_mismatch(t).mean, 0.0);
  EXPECT_EQ(input_mismatch(t).max, 0.0);
  t.records[1].y(0) = 5.0;
  t.records[2].u(0) = 0.75;
  EXPECT_NEAR(tracking_rmse(t), std::sqrt(3.0), 1e-15);
  EXPECT_EQ(input_mismatch(t).max, 0.25);
  EXPECT_THROW(tracking_rmse(Trajectory{}), InvalidProblem);
}

TEST(Trajectory, CsvHeader) {
  std::ostringstream out;
  write_trajectory_csv(run(BackendKind::kQe, bench().initial_states[0], 2), bench().sys, out);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "k,x_0,x_1,sigma,u_0,u_plain_0,y_0,r_0,payload_bits,saturations,fault");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}

TEST(Reference, EquilibriumBasisAndShift) {
  const Matrix basis = equilibrium_basis(bench().sys);
  ASSERT_EQ(basis.cols(), 1);
  EXPECT_NEAR(std::abs(basis(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(basis(1, 0), 0.0, 1e-12);

  const Vector x_ref = vec2(2.0, 0.0);
  const PwaController shifted = shift_controller(bench_ctrl(), bench().sys, x_ref);
  // The shifted law at x_ref + d equals the original law at d.
  for (const Vector& d : {vec2(0.5, -0.3), vec2(-1.0, 0.8), vec2(0, 0)}) {
    const auto s0 = locate_region(bench_ctrl(), d);
    const auto s1 = locate_region(shifted, x_ref + d);
    ASSERT_TRUE(s0 && s1);
    EXPECT_NEAR((eval_pwa(bench_ctrl(), *s0, d) - eval_pwa(shifted, *s1, x_ref + d)).norm(), 0.0,
                1e-12);
  }
  EXPECT_THROW(shift_controller(bench_ctrl(), bench().sys, vec2(0, 1)), InvalidProblem);

  auto backend = make_backend(BackendKind::kQe, shifted, BackendConfig{});
  const Trajectory t = run_closed_loop(bench().sys, shifted, *backend, x_ref + vec2(1, 0), 60, x_ref);
  ASSERT_FALSE(t.fault.has_value());
  EXPECT_NEAR((t.records.back().x - x_ref).norm(), 0.0, 1e-6);
  EXPECT_EQ(t.records.back().r, bench().sys.c_out * x_ref);
}

TEST(ScenarioJson, ParsesBoxesAndDefaults) {
  const std::string text = R"({
    "A": [[1, 1], [0, 1]], "B": [[0.5], [1]], "C": [[1, 0]],
    "horizon": 3, "Q": [[1, 0], [0, 1]], "R": [[0.1]], "P": [[1, 0], [0, 1]],
    "input_set": {"lower": [-2], "upper": [2]},
    "state_set": {"A": [[1, 0]], "b": [4]},
    "initial_states": [[1, 0]], "steps": 7
  })";
  const Scenario s = scenario_from_json(text);
  EXPECT_EQ(s.mpc.horizon, 3);
  EXPECT_EQ(s.steps, 7u);
  EXPECT_EQ(s.mpc.input_set.rows(), 2);
  EXPECT_EQ(s.mpc.state_set.rows(), 1);
  EXPECT_EQ(s.mpc.terminal_set.rows(), 1);
  EXPECT_EQ(s.initial_states.size(), 1u);
  EXPECT_THROW(scenario_from_json("{\"A\": [[1]]"), ConfigError);
  EXPECT_THROW(scenario_from_json(R"({"A": [[1, 1]], "B": [[1]], "C": [[1]], "horizon": 1,
      "Q": [[1]], "R": [[1]], "P": [[1]]})"),
               ConfigError);
}
