#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qempc/linalg.hpp"
#include "qempc/metrics.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/protocol.hpp"

namespace qempc {

struct Scenario {
  std::string name;
  LtiSystem sys;
  MpcSpec mpc;
  std::vector<Vector> initial_states;
  std::size_t steps = 60;
  // Equilibrium the loop regulates to (A x_ref = x_ref); empty means the
  // origin.
  Vector reference;
};

// Double integrator, N = 5, |u| <= 1, |x_i| <= 5, terminal set = state set.
Scenario double_integrator_benchmark();

// Throws ConfigError on malformed input. Sets are given either as
// {"lower": [...], "upper": [...]} or {"A": [[...]], "b": [...]}; omitted
// sets are unconstrained, an omitted terminal set equals the state set.
Scenario scenario_from_json(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

Vector step_plant(const LtiSystem& sys, const Vector& x, const Vector& u);

// Re-expresses a law synthesized around the origin in coordinates where the
// regulated equilibrium is x_ref: regions shift by x_ref and offsets become
// b - K x_ref. Throws InvalidProblem unless A x_ref = x_ref.
PwaController shift_controller(const PwaController& ctrl, const LtiSystem& sys,
                               const Vector& x_ref);

// Orthonormal basis of the equilibria {x : A x = x} (columns; possibly none).
Matrix equilibrium_basis(const LtiSystem& sys);

struct TrajectoryRecord {
  std::uint64_t k = 0;
  Vector x;
  std::size_t sigma = 0;
  Vector u;
  Vector u_plain;
  Vector y;
  Vector r;
  CycleMetrics metrics;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  // Set when the loop stopped early; `fault_state` is the offending state.
  std::optional<std::string> fault;
  Vector fault_state;
};

// Runs `steps` cycles from x0. `ctrl` and the backend must already be
// expressed around `reference` (see shift_controller), which only sets the
// r column. A state outside every region ends the loop with a recorded fault
// instead of throwing.
Trajectory run_closed_loop(const LtiSystem& sys, const PwaController& ctrl, Backend& backend,
                           const Vector& x0, std::size_t steps, const Vector& reference = {});

// sqrt(mean over steps and outputs of (y - r)^2). Throws InvalidProblem on an
// empty trajectory.
double tracking_rmse(const Trajectory& traj);

struct Mismatch {
  double mean = 0.0;  // over all components of all steps
  double max = 0.0;
};
Mismatch input_mismatch(const Trajectory& traj);

// Header: k,x_0..,sigma,u_0..,u_plain_0..,y_0..,r_0..,payload_bits,saturations,fault
void write_trajectory_csv(const Trajectory& traj, const LtiSystem& sys, std::ostream& out);

}  // namespace qempc
