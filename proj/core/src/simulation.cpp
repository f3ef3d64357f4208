#include "qempc/simulation.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "qempc/csv.hpp"
#include "qempc/errors.hpp"

namespace qempc {
namespace {

Polyhedron read_set(const detail::json& j, Eigen::Index dim, const char* what) {
  if (j.contains("lower") || j.contains("upper")) {
    const Vector lo = detail::read_vector(detail::require(j, "lower"), what);
    const Vector hi = detail::read_vector(detail::require(j, "upper"), what);
    if (lo.size() != dim || hi.size() != dim) {
      throw ConfigError(std::string(what) + ": bound dimension mismatch");
    }
    return Polyhedron::box(lo, hi);
  }
  Matrix a = detail::read_matrix(detail::require(j, "A"), what, dim);
  Vector b = detail::read_vector(detail::require(j, "b"), what);
  if (a.rows() > 0 && a.cols() != dim) {
    throw ConfigError(std::string(what) + ": wrong column count");
  }
  return Polyhedron(std::move(a), std::move(b));
}

void check_equilibrium(const LtiSystem& sys, const Vector& x_ref) {
  if (x_ref.size() != sys.n()) throw InvalidProblem("reference dimension mismatch");
  if (x_ref.size() && (sys.a * x_ref - x_ref).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidProblem("reference is not an equilibrium of the plant with u = 0");
  }
}

}  // namespace

Scenario double_integrator_benchmark() {
  Scenario s;
  s.name = "double_integrator";
  s.sys.a = Matrix{{1.0, 1.0}, {0.0, 1.0}};
  s.sys.b = Matrix{{0.5}, {1.0}};
  s.sys.c_out = Matrix{{1.0, 0.0}};
  s.mpc.horizon = 5;
  s.mpc.q = Vector{{1.0, 0.1}}.asDiagonal();
  s.mpc.r = Matrix{{0.5}};
  s.mpc.p_term = s.mpc.q;
  s.mpc.state_set = Polyhedron::box(Vector::Constant(2, -5.0), Vector::Constant(2, 5.0));
  s.mpc.input_set = Polyhedron::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  s.mpc.terminal_set = s.mpc.state_set;
  s.initial_states = {Vector{{3.0, 0.5}}, Vector{{-2.5, 1.0}}, Vector{{1.0, -1.5}}};
  s.steps = 60;
  return s;
}

Scenario scenario_from_json(const std::string& text, const std::string& source) {
  using detail::require;
  const auto doc = detail::parse_json(text, source);
  Scenario s;
  try {
    s.name = doc.value("name", std::string("scenario"));
    s.sys.a = detail::read_matrix(require(doc, "A"), "A");
    s.sys.b = detail::read_matrix(require(doc, "B"), "B");
    s.sys.c_out = detail::read_matrix(require(doc, "C"), "C");
    s.sys.validate();
    const Eigen::Index n = s.sys.n();
    const Eigen::Index m = s.sys.m();
    s.mpc.horizon = require(doc, "horizon").get<int>();
    s.mpc.q = detail::read_matrix(require(doc, "Q"), "Q");
    s.mpc.r = detail::read_matrix(require(doc, "R"), "R");
    s.mpc.p_term = doc.contains("P") ? detail::read_matrix(doc.at("P"), "P") : s.mpc.q;
    s.mpc.state_set = doc.contains("state_set")
                          ? read_set(doc.at("state_set"), n, "state_set")
                          : Polyhedron::whole_space(n);
    s.mpc.input_set = doc.contains("input_set")
                          ? read_set(doc.at("input_set"), m, "input_set")
                          : Polyhedron::whole_space(m);
    s.mpc.terminal_set = doc.contains("terminal_set")
                             ? read_set(doc.at("terminal_set"), n, "terminal_set")
                             : s.mpc.state_set;
    s.mpc.validate(s.sys);
    s.steps = doc.value("steps", std::size_t{60});
    if (doc.contains("initial_states")) {
      for (const auto& x0 : doc.at("initial_states")) {
        Vector v = detail::read_vector(x0, "initial_states");
        if (v.size() != n) throw ConfigError("initial state dimension mismatch");
        s.initial_states.push_back(std::move(v));
      }
    }
    if (s.initial_states.empty()) s.initial_states.push_back(Vector::Zero(n));
    if (doc.contains("reference")) {
      s.reference = detail::read_vector(doc.at("reference"), "reference");
      if (s.reference.size() != n) throw ConfigError("reference dimension mismatch");
    }
  } catch (const detail::json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const InvalidProblem& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str(), path.string());
}

Vector step_plant(const LtiSystem& sys, const Vector& x, const Vector& u) {
  if (x.size() != sys.n() || u.size() != sys.m()) {
    throw InvalidProblem("step_plant: dimension mismatch");
  }
  return sys.a * x + sys.b * u;
}

PwaController shift_controller(const PwaController& ctrl, const LtiSystem& sys,
                               const Vector& x_ref) {
  check_equilibrium(sys, x_ref);
  PwaController out = ctrl;
  for (auto& region : out.regions) {
    region.poly.b += region.poly.a * x_ref;
    region.b -= region.k * x_ref;
  }
  return out;
}

Matrix equilibrium_basis(const LtiSystem& sys) {
  const Matrix d = sys.a - Matrix::Identity(sys.n(), sys.n());
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
  return svd.matrixV().rightCols(sys.n() - rank);
}

Trajectory run_closed_loop(const LtiSystem& sys, const PwaController& ctrl, Backend& backend,
                           const Vector& x0, std::size_t steps, const Vector& reference) {
  const Vector x_ref = reference.size() ? reference : Vector::Zero(sys.n());
  if (x0.size() != sys.n()) throw InvalidProblem("run_closed_loop: state dimension mismatch");
  check_equilibrium(sys, x_ref);
  const Vector r = sys.c_out * x_ref;

  Trajectory traj;
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto sigma = locate_region(ctrl, x);
    if (!sigma) {
      traj.fault = "state at k=" + std::to_string(k) + " lies outside every critical region";
      traj.fault_state = x;
      break;
    }
    CycleResult cycle = backend.run_cycle(k, x);
    TrajectoryRecord rec;
    rec.k = k;
    rec.x = x;
    rec.sigma = cycle.sigma;
    rec.u = cycle.u;
    rec.u_plain = eval_pwa(ctrl, *sigma, x);
    rec.y = sys.c_out * x;
    rec.r = r;
    rec.metrics = cycle.metrics;
    x = step_plant(sys, x, cycle.u);
    traj.records.push_back(std::move(rec));
    if (!x.allFinite()) {
      traj.fault = "state diverged after k=" + std::to_string(k);
      traj.fault_state = x;
      break;
    }
  }
  return traj;
}

double tracking_rmse(const Trajectory& traj) {
  if (traj.records.empty()) throw InvalidProblem("tracking_rmse: empty trajectory");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : traj.records) {
    sum += (rec.y - rec.r).squaredNorm();
    count += static_cast<std::size_t>(rec.y.size());
  }
  return std::sqrt(sum / static_cast<double>(count));
}

Mismatch input_mismatch(const Trajectory& traj) {
  Mismatch out;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : traj.records) {
    const Vector d = (rec.u - rec.u_plain).cwiseAbs();
    sum += d.sum();
    count += static_cast<std::size_t>(d.size());
    if (d.size()) out.max = std::max(out.max, d.maxCoeff());
  }
  if (count) out.mean = sum / static_cast<double>(count);
  return out;
}

void write_trajectory_csv(const Trajectory& traj, const LtiSystem& sys, std::ostream& out) {
  csv::Writer w(out);
  const auto indexed = [&](const char* prefix, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) w.field(std::string(prefix) + std::to_string(i));
  };
  w.field("k");
  indexed("x_", sys.n());
  w.field("sigma");
  indexed("u_", sys.m());
  indexed("u_plain_", sys.m());
  indexed("y_", sys.p());
  indexed("r_", sys.p());
  w.field("payload_bits").field("saturations").field("fault");
  w.end_row();

  const auto put = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.field(v(i));
  };
  for (const auto& rec : traj.records) {
    w.field(rec.k);
    put(rec.x);
    w.field(static_cast<std::uint64_t>(rec.sigma));
    put(rec.u);
    put(rec.u_plain);
    put(rec.y);
    put(rec.r);
    w.field(rec.metrics.payload.total()).field(rec.metrics.saturations).field("");
    w.end_row();
  }
  if (traj.fault) {
    w.field(static_cast<std::uint64_t>(traj.records.size()));
    put(traj.fault_state);
    const Eigen::Index blanks = 1 + 2 * sys.m() + 2 * sys.p() + 2;
    for (Eigen::Index i = 0; i < blanks; ++i) w.field("");
    w.field(*traj.fault);
    w.end_row();
  }
}

}  // namespace qempc
