#include "qempc/mpqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qempc/errors.hpp"
#include "qempc/lp.hpp"

namespace qempc {
namespace {

bool is_symmetric(const Matrix& m) {
  const double scale = 1.0 + m.lpNorm<Eigen::Infinity>();
  return m.rows() == m.cols() &&
         (m - m.transpose()).lpNorm<Eigen::Infinity>() <= 1e-9 * scale;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const Matrix& m, Eigen::Index dim, const char* name,
                 double tol) {
  if (m.rows() != dim || m.cols() != dim) {
    throw InvalidProblem(std::string(name) + ": expected " +
                         std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!m.allFinite() || !is_symmetric(m)) {
    throw InvalidProblem(std::string(name) + ": must be finite and symmetric");
  }
  if (min_eigenvalue(m) < -tol) {
    throw InvalidProblem(std::string(name) + ": not positive semidefinite");
  }
}

Eigen::Index matrix_rank(const Matrix& m, double tol) {
  if (m.rows() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++r;
  }
  return r;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) =
        m.row(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

Vector select_entries(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

// Solves the equality-constrained QP on working set W:
//   [H  G_W'] [z]   [-f ]
//   [G_W  0 ] [l] = [c_W]
void solve_working_set(const Matrix& h, const Vector& f, const Matrix& g_w,
                       const Vector& c_w, Vector& z, Vector& lambda) {
  const Eigen::Index nz = h.rows();
  const Eigen::Index nw = g_w.rows();
  Matrix kkt = Matrix::Zero(nz + nw, nz + nw);
  kkt.topLeftCorner(nz, nz) = h;
  kkt.topRightCorner(nz, nw) = g_w.transpose();
  kkt.bottomLeftCorner(nw, nz) = g_w;
  Vector rhs(nz + nw);
  rhs << -f, c_w;
  const Vector sol = kkt.fullPivLu().solve(rhs);
  z = sol.head(nz);
  lambda = sol.tail(nw);
}

}  // namespace

void LtiSystem::validate() const {
  if (a.rows() != a.cols()) throw InvalidProblem("A must be square");
  if (b.rows() != a.rows()) throw InvalidProblem("B must have n rows");
  if (c_out.cols() != a.rows()) throw InvalidProblem("C must have n columns");
  if (a.rows() == 0 || b.cols() == 0) {
    throw InvalidProblem("system dimensions must be positive");
  }
  if (!a.allFinite() || !b.allFinite() || !c_out.allFinite()) {
    throw InvalidProblem("system matrices must be finite");
  }
}

void MpcSpec::validate(const LtiSystem& sys) const {
  sys.validate();
  const double tol = 1e-10;
  if (horizon < 1) throw InvalidProblem("horizon must be positive");
  require_psd(q, sys.n(), "Q", tol);
  require_psd(p_term, sys.n(), "P", tol);
  if (r.rows() != sys.m() || r.cols() != sys.m() || !r.allFinite() ||
      !is_symmetric(r)) {
    throw InvalidProblem("R must be a finite symmetric m x m matrix");
  }
  if (min_eigenvalue(r) <= tol) {
    throw InvalidProblem("R must be positive definite");
  }
  if (state_set.dim() != sys.n() || terminal_set.dim() != sys.n()) {
    throw InvalidProblem("state and terminal sets must live in R^n");
  }
  if (input_set.dim() != sys.m()) {
    throw InvalidProblem("input set must live in R^m");
  }
}

CondensedQp condense(const LtiSystem& sys, const MpcSpec& spec,
                     const SynthesisTolerances& tol) {
  spec.validate(sys);
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  const Eigen::Index horizon = spec.horizon;
  const Eigen::Index nz = m * horizon;

  // Stacked predictions [x_1; ...; x_N] = sx * x + su * z.
  std::vector<Matrix> a_pow(static_cast<std::size_t>(horizon) + 1);
  a_pow[0] = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= horizon; ++k) {
    a_pow[static_cast<std::size_t>(k)] =
        sys.a * a_pow[static_cast<std::size_t>(k - 1)];
  }
  Matrix sx(n * horizon, n);
  Matrix su = Matrix::Zero(n * horizon, nz);
  for (Eigen::Index k = 1; k <= horizon; ++k) {
    sx.middleRows((k - 1) * n, n) = a_pow[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < k; ++j) {
      su.block((k - 1) * n, j * m, n, m) =
          a_pow[static_cast<std::size_t>(k - 1 - j)] * sys.b;
    }
  }

  Matrix q_bar = Matrix::Zero(n * horizon, n * horizon);
  for (Eigen::Index k = 0; k < horizon - 1; ++k) {
    q_bar.block(k * n, k * n, n, n) = spec.q;
  }
  q_bar.block((horizon - 1) * n, (horizon - 1) * n, n, n) = spec.p_term;
  Matrix r_bar = Matrix::Zero(nz, nz);
  for (Eigen::Index k = 0; k < horizon; ++k) {
    r_bar.block(k * m, k * m, m, m) = spec.r;
  }

  CondensedQp qp;
  qp.h_mat = r_bar + su.transpose() * q_bar * su;
  qp.h_mat = 0.5 * (qp.h_mat + qp.h_mat.transpose()).eval();
  qp.f_mat = su.transpose() * q_bar * sx;
  if (min_eigenvalue(qp.h_mat) <= tol.positive_definite) {
    throw InvalidProblem("condensed Hessian is not positive definite");
  }

  const Eigen::Index ru = spec.input_set.rows();
  const Eigen::Index rx = spec.state_set.rows();
  const Eigen::Index rt = spec.terminal_set.rows();
  const Eigen::Index q = horizon * ru + (horizon - 1) * rx + rt;
  qp.g_mat = Matrix::Zero(q, nz);
  qp.e_mat = Matrix::Zero(q, n);
  qp.h_vec = Vector::Zero(q);

  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < horizon; ++k) {
    qp.g_mat.block(row, k * m, ru, m) = spec.input_set.a;
    qp.h_vec.segment(row, ru) = spec.input_set.b;
    row += ru;
  }
  for (Eigen::Index k = 1; k < horizon; ++k) {
    qp.g_mat.middleRows(row, rx) = spec.state_set.a * su.middleRows((k - 1) * n, n);
    qp.e_mat.middleRows(row, rx) = -spec.state_set.a * sx.middleRows((k - 1) * n, n);
    qp.h_vec.segment(row, rx) = spec.state_set.b;
    row += rx;
  }
  qp.g_mat.middleRows(row, rt) =
      spec.terminal_set.a * su.middleRows((horizon - 1) * n, n);
  qp.e_mat.middleRows(row, rt) =
      -spec.terminal_set.a * sx.middleRows((horizon - 1) * n, n);
  qp.h_vec.segment(row, rt) = spec.terminal_set.b;

  qp.selector = Matrix::Zero(m, nz);
  qp.selector.leftCols(m).setIdentity();
  qp.parameter_set = spec.state_set;
  return qp;
}

QpSolution solve_qp_oracle(const CondensedQp& qp, const Vector& x,
                           const SynthesisTolerances& tol) {
  if (x.size() != qp.n()) throw InvalidProblem("state dimension mismatch");
  const Eigen::Index nz = qp.nz();
  const Eigen::Index q = qp.q();
  const Vector f = qp.f_mat * x;
  const Vector c = qp.e_mat * x + qp.h_vec;

  QpSolution sol;
  sol.multipliers = Vector::Zero(q);

  Vector z;
  if (q == 0) {
    z = qp.h_mat.llt().solve(-f);
  } else {
    const LpResult start = solve_lp(Vector::Zero(nz), qp.g_mat, c);
    if (start.status != LpStatus::kOptimal) {
      throw InfeasibleError("QP has no feasible point for this state");
    }
    z = start.x;
  }

  // Initial working set: independent subset of the constraints active at z.
  std::vector<std::size_t> work;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (std::abs(qp.g_mat.row(i).dot(z) - c(i)) > tol.feasibility) continue;
    auto trial = work;
    trial.push_back(static_cast<std::size_t>(i));
    if (matrix_rank(select_rows(qp.g_mat, trial), tol.rank) ==
        static_cast<Eigen::Index>(trial.size())) {
      work = std::move(trial);
    }
  }

  const std::size_t max_iter = 100 * (static_cast<std::size_t>(q) + 1);
  Vector lambda_w;
  bool converged = q == 0;
  for (std::size_t it = 0; it < max_iter && !converged; ++it) {
    Vector z_eq;
    solve_working_set(qp.h_mat, f, select_rows(qp.g_mat, work),
                      select_entries(c, work), z_eq, lambda_w);
    const Vector step = z_eq - z;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      Eigen::Index worst = -1;
      double worst_val = -tol.feasibility;
      for (Eigen::Index k = 0; k < lambda_w.size(); ++k) {
        if (lambda_w(k) < worst_val) {
          worst_val = lambda_w(k);
          worst = k;
        }
      }
      if (worst < 0) {
        converged = true;
        break;
      }
      work.erase(work.begin() + worst);
      continue;
    }
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < q; ++i) {
      if (std::find(work.begin(), work.end(), static_cast<std::size_t>(i)) !=
          work.end()) {
        continue;
      }
      const double gp = qp.g_mat.row(i).dot(step);
      if (gp <= 1e-14) continue;
      const double slack = std::max(0.0, c(i) - qp.g_mat.row(i).dot(z));
      const double ai = slack / gp;
      if (ai < alpha) {
        alpha = ai;
        blocking = i;
      }
    }
    z += alpha * step;
    if (blocking >= 0) {
      work.push_back(static_cast<std::size_t>(blocking));
      std::sort(work.begin(), work.end());
    }
  }
  if (!converged) {
    throw InfeasibleError("active-set QP solver did not converge");
  }

  // Polish on the final working set so z is exact to working precision.
  if (q > 0) {
    solve_working_set(qp.h_mat, f, select_rows(qp.g_mat, work),
                      select_entries(c, work), z, lambda_w);
    for (std::size_t k = 0; k < work.size(); ++k) {
      sol.multipliers(static_cast<Eigen::Index>(work[k])) =
          lambda_w(static_cast<Eigen::Index>(k));
    }
  }
  sol.z = z;
  sol.active_set = work;
  Vector grad = qp.h_mat * z + f;
  if (q > 0) grad += qp.g_mat.transpose() * sol.multipliers;
  sol.kkt_residual = grad.lpNorm<Eigen::Infinity>();
  return sol;
}

namespace {

class RegionEnumerator {
 public:
  RegionEnumerator(const CondensedQp& qp, const SynthesisTolerances& tol,
                   EnumerationStats& stats)
      : qp_(qp), tol_(tol), stats_(stats) {
    const Eigen::LLT<Matrix> llt(qp.h_mat);
    h_inv_ = llt.solve(Matrix::Identity(qp.nz(), qp.nz()));
    h_inv_f_ = h_inv_ * qp.f_mat;
  }

  std::vector<CriticalRegion> run() {
    std::vector<std::size_t> active;
    visit(active, 0);
    return std::move(found_);
  }

 private:
  void visit(std::vector<std::size_t>& active, std::size_t next) {
    ++stats_.candidates;
    build_region(active);
    if (static_cast<Eigen::Index>(active.size()) >= qp_.nz()) return;
    for (std::size_t j = next; j < static_cast<std::size_t>(qp_.q()); ++j) {
      if (qp_.g_mat.row(static_cast<Eigen::Index>(j)).lpNorm<Eigen::Infinity>() == 0.0) {
        continue;
      }
      active.push_back(j);
      if (matrix_rank(select_rows(qp_.g_mat, active), tol_.rank) !=
          static_cast<Eigen::Index>(active.size())) {
        ++stats_.degenerate;
      } else if (!jointly_active(active)) {
        ++stats_.never_active;
      } else {
        visit(active, j + 1);
      }
      active.pop_back();
    }
  }

  // Is there (x, z) with x admissible, z feasible and every row of `active`
  // tight? If not, no superset can be active either.
  bool jointly_active(const std::vector<std::size_t>& active) const {
    const Eigen::Index n = qp_.n();
    const Eigen::Index nz = qp_.nz();
    const Eigen::Index q = qp_.q();
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    const Polyhedron& theta = qp_.parameter_set;
    Matrix a = Matrix::Zero(q + na + theta.rows(), n + nz);
    Vector b(q + na + theta.rows());
    a.topLeftCorner(q, n) = -qp_.e_mat;
    a.topRightCorner(q, nz) = qp_.g_mat;
    b.head(q) = qp_.h_vec;
    for (Eigen::Index k = 0; k < na; ++k) {
      const auto i = static_cast<Eigen::Index>(active[static_cast<std::size_t>(k)]);
      a.block(q + k, 0, 1, n) = qp_.e_mat.row(i);
      a.block(q + k, n, 1, nz) = -qp_.g_mat.row(i);
      b(q + k) = -qp_.h_vec(i);
    }
    a.block(q + na, 0, theta.rows(), n) = theta.a;
    b.tail(theta.rows()) = theta.b;
    return solve_lp(Vector::Zero(n + nz), a, b).status == LpStatus::kOptimal;
  }

  void build_region(const std::vector<std::size_t>& active) {
    const Eigen::Index n = qp_.n();
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());

    // z(x) = zx * x + z0 and lambda_A(x) = lx * x + l0 from the KKT system.
    Matrix zx = -h_inv_f_;
    Vector z0 = Vector::Zero(qp_.nz());
    Matrix lx(0, n);
    Vector l0(0);
    if (na > 0) {
      const Matrix g_a = select_rows(qp_.g_mat, active);
      const Matrix e_a = select_rows(qp_.e_mat, active);
      const Vector h_a = select_entries(qp_.h_vec, active);
      const Matrix m = g_a * h_inv_ * g_a.transpose();
      const Eigen::FullPivLU<Matrix> lu(m);
      lx = -lu.solve(e_a + g_a * h_inv_f_);
      l0 = -lu.solve(h_a);
      zx -= h_inv_ * g_a.transpose() * lx;
      z0 = -h_inv_ * g_a.transpose() * l0;
    }

    const Eigen::Index q = qp_.q();
    const Polyhedron& theta = qp_.parameter_set;
    Matrix a(q - na + na + theta.rows(), n);
    Vector b(a.rows());
    Eigen::Index row = 0;
    std::size_t next_active = 0;
    for (Eigen::Index i = 0; i < q; ++i) {
      if (next_active < active.size() &&
          active[next_active] == static_cast<std::size_t>(i)) {
        ++next_active;
        continue;
      }
      a.row(row) = qp_.g_mat.row(i) * zx - qp_.e_mat.row(i);
      b(row) = qp_.h_vec(i) - qp_.g_mat.row(i).dot(z0);
      ++row;
    }
    for (Eigen::Index k = 0; k < na; ++k) {
      a.row(row) = -lx.row(k);
      b(row) = l0(k);
      ++row;
    }
    a.bottomRows(theta.rows()) = theta.a;
    b.tail(theta.rows()) = theta.b;

    bool ok = true;
    const Polyhedron poly = Polyhedron(std::move(a), std::move(b)).normalized(&ok);
    if (!ok) {
      ++stats_.empty;
      return;
    }
    const ChebyshevBall ball = chebyshev_center(poly);
    if (!(ball.radius > tol_.chebyshev_radius)) {
      ++stats_.empty;
      return;
    }
    CriticalRegion region;
    region.poly = poly.irredundant(tol_.feasibility);
    region.k = qp_.selector * zx;
    region.b = qp_.selector * z0;
    region.active_set = active;
    found_.push_back(std::move(region));
  }

  const CondensedQp& qp_;
  const SynthesisTolerances& tol_;
  EnumerationStats& stats_;
  Matrix h_inv_;
  Matrix h_inv_f_;
  std::vector<CriticalRegion> found_;
};

bool same_polyhedron(const Polyhedron& p1, const Polyhedron& p2, double tol) {
  if (p1.rows() != p2.rows()) return false;
  // Rows are normalized; match each row of p1 to some row of p2.
  for (Eigen::Index i = 0; i < p1.rows(); ++i) {
    bool matched = false;
    for (Eigen::Index j = 0; j < p2.rows() && !matched; ++j) {
      matched = (p1.a.row(i) - p2.a.row(j)).lpNorm<Eigen::Infinity>() <= tol &&
                std::abs(p1.b(i) - p2.b(j)) <= tol;
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace

PwaController enumerate_regions(const CondensedQp& qp,
                                const SynthesisTolerances& tol,
                                EnumerationStats* stats) {
  EnumerationStats local;
  EnumerationStats& st = stats ? *stats : local;
  st = EnumerationStats{};

  RegionEnumerator enumerator(qp, tol, st);
  std::vector<CriticalRegion> regions = enumerator.run();
  std::stable_sort(regions.begin(), regions.end(),
                   [](const CriticalRegion& l, const CriticalRegion& r) {
                     if (l.active_set.size() != r.active_set.size()) {
                       return l.active_set.size() < r.active_set.size();
                     }
                     return l.active_set < r.active_set;
                   });

  const double dup_tol = 1e-8;
  PwaController ctrl;
  ctrl.n = qp.n();
  ctrl.m = qp.m();
  for (auto& region : regions) {
    const bool dup = std::any_of(
        ctrl.regions.begin(), ctrl.regions.end(), [&](const CriticalRegion& kept) {
          return (kept.k - region.k).lpNorm<Eigen::Infinity>() <= dup_tol &&
                 (kept.b - region.b).lpNorm<Eigen::Infinity>() <= dup_tol &&
                 same_polyhedron(kept.poly, region.poly, dup_tol);
        });
    if (dup) {
      ++st.duplicates;
      continue;
    }
    ctrl.regions.push_back(std::move(region));
  }
  if (ctrl.regions.empty()) {
    throw EmptyController("no critical region with nonempty interior");
  }
  return ctrl;
}

std::optional<std::size_t> locate_region(const PwaController& ctrl,
                                         const Vector& x, double tol) {
  if (x.size() != ctrl.n) throw InvalidProblem("state dimension mismatch");
  for (std::size_t s = 0; s < ctrl.regions.size(); ++s) {
    if (ctrl.regions[s].poly.contains(x, tol)) return s;
  }
  return std::nullopt;
}

Vector eval_pwa(const PwaController& ctrl, std::size_t sigma, const Vector& x) {
  if (sigma >= ctrl.regions.size()) {
    throw InvalidRegion("region index " + std::to_string(sigma) +
                        " out of range");
  }
  if (x.size() != ctrl.n) throw InvalidProblem("state dimension mismatch");
  return ctrl.regions[sigma].eval(x);
}

}  // namespace qempc
