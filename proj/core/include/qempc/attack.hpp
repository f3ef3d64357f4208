#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string_view>
#include <vector>

#include "qempc/linalg.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/protocol.hpp"
#include "qempc/simulation.hpp"

// Passive least-squares identification adversary on the sensor-to-cloud link.
namespace qempc::attack {

enum class NoiseKind { kNone, kGaussian, kUniform, kImpulse };

inline constexpr std::array<NoiseKind, 4> kAllNoise = {
    NoiseKind::kNone, NoiseKind::kGaussian, NoiseKind::kUniform, NoiseKind::kImpulse};

std::string_view noise_name(NoiseKind kind);

// Multiples of the observation RMS.
struct NoiseScales {
  double gaussian_sigma = 0.01;
  double uniform_half_width = 0.02;
  double impulse_amplitude = 0.5;
  double impulse_rate = 0.05;
};

// The adversary's n-vector per cycle: the plaintext state, the QE
// ciphertexts as positive reals, or log2 of the Paillier residues.
std::vector<Vector> proxies_from_tap(const EavesdropLog& log, BackendKind kind,
                                     Eigen::Index n, Eigen::Index m, unsigned w = 16);

// Perturbs observations in place; each channel's scale is relative to that
// channel's RMS over the sequence.
void add_noise(std::vector<Vector>& obs, NoiseKind kind, const NoiseScales& scales,
               std::mt19937_64& rng);

struct LsPredictor {
  Matrix theta;  // n x (n + m)
  double residual = 0.0;
  bool regularized = false;  // regressors were rank deficient
};

// theta = argmin sum_k |proxy(k+1) - theta [proxy(k); u(k)]|^2 through the
// ridge-regularized normal equations. Needs n + m + 1 transitions.
LsPredictor fit_ls_predictor(const std::vector<Vector>& proxies,
                             const std::vector<Vector>& inputs, double ridge = 1e-9);

struct Rollout {
  std::vector<Vector> states;
  // First step whose norm exceeded 1e6; later entries hold that value.
  std::optional<std::size_t> diverged_at;
};

Rollout rollout(const LsPredictor& pred, const Vector& x0, const std::vector<Vector>& inputs,
                std::size_t steps);

struct Score {
  double value = 0.0;
  std::size_t counted = 0;
  std::size_t skipped = 0;  // steps with |x(k)| <= 1e-12

  bool defined() const { return counted > 0; }
};

// 1/T sum_k |xhat(k) - x(k)| / |x(k)| over the first T steps.
Score confidentiality_score(const std::vector<Vector>& truth,
                            const std::vector<Vector>& predicted, std::size_t horizon);

struct AttackConfig {
  std::size_t trials = 200;
  std::size_t horizon = 60;
  NoiseScales scales;
  std::uint64_t seed = 7;
  // Each trial regulates to a random equilibrium whose coordinates along the
  // equilibrium basis have magnitudes in [reference_min, reference_max], so
  // the observed state does not decay to zero. Both zero: regulate to 0.
  double reference_min = 1.0;
  double reference_max = 3.0;
  BackendConfig backend;
  std::vector<BackendKind> backends = {BackendKind::kPlaintext, BackendKind::kPaillier,
                                       BackendKind::kQe};
};

struct AttackCell {
  double mean = 0.0;      // over trials with a defined score
  std::size_t defined = 0;
  std::size_t diverged = 0;
  std::size_t regularized = 0;
};

// Rows follow kAllNoise, columns follow config.backends.
struct AttackTable {
  std::vector<BackendKind> backends;
  std::vector<std::array<AttackCell, 4>> columns;

  const AttackCell& at(NoiseKind noise, std::size_t backend) const {
    return columns[backend][static_cast<std::size_t>(noise)];
  }
};

// Initial deviations are drawn uniformly from the bounding box of the state
// set and kept when the plaintext loop completes the horizon.
AttackTable run_attack_table(const Scenario& scenario, const PwaController& ctrl,
                             const AttackConfig& config);

// Header: noise,<backend>... ; one row per noise setting.
void write_attack_csv(const AttackTable& table, std::ostream& out);

}  // namespace qempc::attack
