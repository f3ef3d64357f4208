#include "qempc/attack.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qempc/csv.hpp"
#include "qempc/errors.hpp"
#include "qempc/lp.hpp"

namespace qempc::attack {
namespace {

constexpr double kDivergence = 1e6;
constexpr double kZeroState = 1e-12;

// Kahan-compensated running sum.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-coordinate bounds of a polyhedron from 2n LPs.
std::pair<Vector, Vector> bounding_box(const Polyhedron& poly) {
  const Eigen::Index n = poly.dim();
  Vector lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector c = Vector::Zero(n);
    c(i) = 1.0;
    const LpResult low = solve_lp(c, poly.a, poly.b);
    const LpResult high = solve_lp(-c, poly.a, poly.b);
    if (low.status != LpStatus::kOptimal || high.status != LpStatus::kOptimal) {
      throw InvalidProblem("attack sampling needs a bounded, nonempty state set");
    }
    lo(i) = low.x(i);
    hi(i) = high.x(i);
  }
  return {lo, hi};
}

std::vector<Vector> states_of(const Trajectory& traj) {
  std::vector<Vector> out;
  for (const auto& rec : traj.records) out.push_back(rec.x);
  return out;
}

std::vector<Vector> inputs_of(const Trajectory& traj) {
  std::vector<Vector> out;
  for (const auto& rec : traj.records) out.push_back(rec.u);
  return out;
}

}  // namespace

std::string_view noise_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kUniform: return "uniform";
    case NoiseKind::kImpulse: return "impulse";
  }
  return "unknown";
}

std::vector<Vector> proxies_from_tap(const EavesdropLog& log, BackendKind kind,
                                     Eigen::Index n, Eigen::Index m, unsigned w) {
  std::vector<Vector> out;
  for (const auto& rec : log.records()) {
    if (rec.link != Link::kSensorToCloud) continue;
    switch (kind) {
      case BackendKind::kPlaintext:
      case BackendKind::kQe: {
        // Both carry sigma then n doubles for the state.
        out.push_back(decode_sensor_message(rec.bytes, n, m, QeWire{}).x.entries);
        break;
      }
      case BackendKind::kQeQuantized:
        out.push_back(decode_sensor_message(rec.bytes, n, m, QeWire{true, w}).x.entries);
        break;
      case BackendKind::kPaillier: {
        const HeMsgSensorToCloud msg = decode_he_sensor_message(rec.bytes, n, m, 0);
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          long exp = 0;
          const double mant = mpz_get_d_2exp(&exp, msg.x[static_cast<std::size_t>(i)].value.get_mpz_t());
          v(i) = mant > 0.0 ? static_cast<double>(exp) + std::log2(mant) : 0.0;
        }
        out.push_back(std::move(v));
        break;
      }
    }
  }
  return out;
}

void add_noise(std::vector<Vector>& obs, NoiseKind kind, const NoiseScales& scales,
               std::mt19937_64& rng) {
  if (kind == NoiseKind::kNone || obs.empty()) return;
  const Eigen::Index n = obs.front().size();
  Vector rms = Vector::Zero(n);
  for (const auto& v : obs) rms += v.cwiseAbs2();
  rms = (rms / static_cast<double>(obs.size())).cwiseSqrt();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (auto& v : obs) {
    for (Eigen::Index i = 0; i < n; ++i) {
      switch (kind) {
        case NoiseKind::kGaussian: v(i) += scales.gaussian_sigma * rms(i) * gauss(rng); break;
        case NoiseKind::kUniform: v(i) += scales.uniform_half_width * rms(i) * unif(rng); break;
        case NoiseKind::kImpulse:
          if (coin(rng) < scales.impulse_rate) {
            v(i) += (coin(rng) < 0.5 ? -1.0 : 1.0) * scales.impulse_amplitude * rms(i);
          }
          break;
        case NoiseKind::kNone: break;
      }
    }
  }
}

LsPredictor fit_ls_predictor(const std::vector<Vector>& proxies,
                             const std::vector<Vector>& inputs, double ridge) {
  if (proxies.empty()) throw InvalidProblem("fit_ls_predictor: no observations");
  const Eigen::Index n = proxies.front().size();
  const Eigen::Index m = inputs.empty() ? 0 : inputs.front().size();
  const std::size_t transitions = std::min(proxies.size() - 1, inputs.size());
  if (transitions < static_cast<std::size_t>(n + m + 1)) {
    throw InvalidProblem("fit_ls_predictor: need at least n + m + 1 transitions");
  }
  const auto cols = static_cast<Eigen::Index>(transitions);
  Matrix phi(n + m, cols);
  Matrix y(n, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    phi.col(k) << proxies[ks], inputs[ks];
    y.col(k) = proxies[ks + 1];
  }
  const Matrix gram = phi * phi.transpose();
  LsPredictor pred;
  Eigen::JacobiSVD<Matrix> svd(gram);
  const Vector sv = svd.singularValues();
  pred.regularized = sv(sv.size() - 1) <= 1e-12 * std::max(sv(0), 1e-300);
  const Matrix reg = gram + ridge * Matrix::Identity(n + m, n + m);
  pred.theta = reg.ldlt().solve(phi * y.transpose()).transpose();
  pred.residual = (y - pred.theta * phi).norm();
  if (!pred.theta.allFinite()) throw InvalidProblem("fit_ls_predictor: non-finite fit");
  return pred;
}

Rollout rollout(const LsPredictor& pred, const Vector& x0, const std::vector<Vector>& inputs,
                std::size_t steps) {
  Rollout out;
  if (steps == 0) return out;
  const Eigen::Index n = x0.size();
  out.states.push_back(x0);
  Vector x = x0;
  for (std::size_t k = 0; k + 1 < steps; ++k) {
    if (!out.diverged_at) {
      if (k >= inputs.size()) throw InvalidProblem("rollout: not enough inputs");
      Vector z(n + inputs[k].size());
      z << x, inputs[k];
      x = pred.theta * z;
      if (!x.allFinite() || x.norm() > kDivergence) {
        out.diverged_at = k + 1;
        if (!x.allFinite()) x = Vector::Constant(n, kDivergence);
      }
    }
    out.states.push_back(x);
  }
  return out;
}

Score confidentiality_score(const std::vector<Vector>& truth,
                            const std::vector<Vector>& predicted, std::size_t horizon) {
  Score s;
  const std::size_t t = std::min({horizon, truth.size(), predicted.size()});
  Accumulator acc;
  for (std::size_t k = 0; k < t; ++k) {
    const double denom = truth[k].norm();
    if (denom <= kZeroState) {
      ++s.skipped;
      continue;
    }
    acc.add((predicted[k] - truth[k]).norm() / denom);
    ++s.counted;
  }
  s.value = s.counted ? acc.sum / static_cast<double>(s.counted)
                      : std::numeric_limits<double>::quiet_NaN();
  return s;
}

AttackTable run_attack_table(const Scenario& scenario, const PwaController& ctrl,
                             const AttackConfig& config) {
  if (config.trials == 0) throw ConfigError("attack needs at least one trial");
  const Eigen::Index n = scenario.sys.n();
  const Eigen::Index m = scenario.sys.m();
  const auto [lo, hi] = bounding_box(scenario.mpc.state_set);
  const std::size_t min_len = static_cast<std::size_t>(n + m + 2);
  const bool track = config.reference_max > 0.0;
  const Matrix basis = track ? equilibrium_basis(scenario.sys) : Matrix(n, 0);

  AttackTable table;
  table.backends = config.backends;
  table.columns.resize(config.backends.size());
  std::vector<std::array<Accumulator, 4>> sums(config.backends.size());

  std::mt19937_64 sampler(mix(config.seed, 0));
  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    BackendConfig bcfg = config.backend;
    bcfg.seed_keys = mix(config.backend.seed_keys, trial);
    bcfg.seed_quant = mix(config.backend.seed_quant, trial);

    // Draw an equilibrium and a start whose plaintext loop runs the full
    // horizon.
    Vector x0;
    PwaController shifted;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) throw InvalidProblem("could not sample a feasible initial state");
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      Vector coeff(basis.cols());
      for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        const double mag = config.reference_min +
                           (config.reference_max - config.reference_min) * u01(sampler);
        coeff(i) = u01(sampler) < 0.5 ? -mag : mag;
      }
      const Vector x_ref = basis * coeff;
      x0 = x_ref;
      for (Eigen::Index i = 0; i < n; ++i) x0(i) += lo(i) + (hi(i) - lo(i)) * u01(sampler);
      shifted = shift_controller(ctrl, scenario.sys, x_ref);
      if (!locate_region(shifted, x0)) continue;
      auto probe = make_backend(BackendKind::kPlaintext, shifted, bcfg);
      const Trajectory t = run_closed_loop(scenario.sys, shifted, *probe, x0, config.horizon, x_ref);
      if (!t.fault && t.records.size() >= min_len) break;
    }

    for (std::size_t b = 0; b < config.backends.size(); ++b) {
      const BackendKind kind = config.backends[b];
      auto backend = make_backend(kind, shifted, bcfg);
      const Trajectory traj =
          run_closed_loop(scenario.sys, shifted, *backend, x0, config.horizon);
      if (traj.records.size() < min_len) continue;
      const std::vector<Vector> truth = states_of(traj);
      const std::vector<Vector> inputs = inputs_of(traj);
      const std::vector<Vector> clean = proxies_from_tap(backend->tap(), kind, n, m, bcfg.w);

      for (NoiseKind noise : kAllNoise) {
        std::vector<Vector> obs = clean;
        std::mt19937_64 noise_rng(
            mix(mix(config.seed, trial + 1), (b << 8) | static_cast<std::size_t>(noise)));
        add_noise(obs, noise, config.scales, noise_rng);
        const LsPredictor pred = fit_ls_predictor(obs, inputs);
        const Rollout roll = rollout(pred, truth.front(), inputs, truth.size());
        const Score score = confidentiality_score(truth, roll.states, config.horizon);
        AttackCell& cell = table.columns[b][static_cast<std::size_t>(noise)];
        if (pred.regularized) ++cell.regularized;
        if (roll.diverged_at) ++cell.diverged;
        if (!score.defined()) continue;
        sums[b][static_cast<std::size_t>(noise)].add(score.value);
        ++cell.defined;
      }
    }
  }
  for (std::size_t b = 0; b < table.columns.size(); ++b) {
    for (std::size_t r = 0; r < 4; ++r) {
      AttackCell& cell = table.columns[b][r];
      cell.mean = cell.defined ? sums[b][r].sum / static_cast<double>(cell.defined)
                               : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return table;
}

void write_attack_csv(const AttackTable& table, std::ostream& out) {
  csv::Writer w(out);
  w.field("noise");
  for (BackendKind kind : table.backends) w.field(backend_name(kind));
  w.end_row();
  for (NoiseKind noise : kAllNoise) {
    w.field(noise_name(noise));
    for (std::size_t b = 0; b < table.backends.size(); ++b) w.field(table.at(noise, b).mean);
    w.end_row();
  }
}

}  // namespace qempc::attack
