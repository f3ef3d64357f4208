#include "qempc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qempc {
namespace {

// Dense tableau. Row `rows` holds the reduced costs, column `cols` the
// right-hand side. The objective row stores -objective in its rhs slot.
class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols)
      : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Matrix& data() { return t_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  std::vector<Eigen::Index>& basis() { return basis_; }

  double rhs(Eigen::Index r) const { return t_(r, cols()); }
  double reduced_cost(Eigen::Index c) const { return t_(rows(), c); }
  double objective() const { return -t_(rows(), cols()); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    const double p = t_(r, c);
    t_.row(r) /= p;
    for (Eigen::Index i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Rebuilds the objective row for cost vector `cost` over the current basis.
  void set_objective(const Vector& cost) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(cost.size()) = cost.transpose();
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const Eigen::Index bc = basis_[static_cast<std::size_t>(r)];
      if (bc < 0) continue;
      const double cb = bc < cost.size() ? cost(bc) : 0.0;
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(r);
    }
  }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

enum class PhaseOutcome { kOptimal, kUnbounded, kIterationLimit };

// Bland's rule: lowest-index improving column enters; ties in the ratio test
// go to the lowest-index basic variable.
PhaseOutcome run_phase(Tableau& tab, Eigen::Index allowed_cols,
                       const std::vector<bool>& row_active,
                       const LpOptions& opt) {
  for (std::size_t it = 0; it < opt.max_pivots; ++it) {
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < allowed_cols; ++c) {
      if (tab.reduced_cost(c) < -opt.cost_tol) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return PhaseOutcome::kOptimal;

    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < tab.rows(); ++r) {
      if (!row_active[static_cast<std::size_t>(r)]) continue;
      const double coef = tab.data()(r, enter);
      if (coef <= opt.pivot_tol) continue;
      const double ratio = tab.rhs(r) / coef;
      if (ratio < best_ratio - 1e-14 ||
          (std::abs(ratio - best_ratio) <= 1e-14 && leave >= 0 &&
           tab.basis()[static_cast<std::size_t>(r)] <
               tab.basis()[static_cast<std::size_t>(leave)])) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave < 0) return PhaseOutcome::kUnbounded;
    tab.pivot(leave, enter);
  }
  return PhaseOutcome::kIterationLimit;
}

}  // namespace

LpResult solve_lp(const Vector& cost, const Matrix& a, const Vector& b,
                  const LpOptions& opt) {
  const Eigen::Index d = a.cols();
  const Eigen::Index r = a.rows();
  LpResult result;

  if (r == 0) {
    result.x = Vector::Zero(d);
    if (cost.lpNorm<Eigen::Infinity>() > 0.0) {
      result.status = LpStatus::kUnbounded;
    } else {
      result.status = LpStatus::kOptimal;
    }
    return result;
  }

  // Columns: x+ (d), x- (d), slacks (r), artificials (one per negative rhs).
  std::vector<Eigen::Index> art_row;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (b(i) < 0.0) art_row.push_back(i);
  }
  const Eigen::Index n_art = static_cast<Eigen::Index>(art_row.size());
  const Eigen::Index slack0 = 2 * d;
  const Eigen::Index art0 = slack0 + r;
  const Eigen::Index n_cols = art0 + n_art;

  Tableau tab(r, n_cols);
  Matrix& t = tab.data();
  Eigen::Index next_art = art0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, d) = sign * a.row(i);
    t.block(i, d, 1, d) = -sign * a.row(i);
    t(i, slack0 + i) = sign;
    t(i, n_cols) = sign * b(i);
    if (b(i) < 0.0) {
      t(i, next_art) = 1.0;
      tab.basis()[static_cast<std::size_t>(i)] = next_art++;
    } else {
      tab.basis()[static_cast<std::size_t>(i)] = slack0 + i;
    }
  }

  std::vector<bool> row_active(static_cast<std::size_t>(r), true);

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(n_cols);
    phase1.tail(n_art).setOnes();
    tab.set_objective(phase1);
    const PhaseOutcome out = run_phase(tab, n_cols, row_active, opt);
    if (out == PhaseOutcome::kIterationLimit) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();
    if (tab.objective() > opt.feasibility_tol * scale) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and get retired.
    for (Eigen::Index i = 0; i < r; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
      Eigen::Index col = -1;
      for (Eigen::Index c = 0; c < art0; ++c) {
        if (std::abs(t(i, c)) > opt.pivot_tol) {
          col = c;
          break;
        }
      }
      if (col >= 0) {
        tab.pivot(i, col);
      } else {
        row_active[static_cast<std::size_t>(i)] = false;
      }
    }
  }

  Vector phase2 = Vector::Zero(n_cols);
  phase2.head(d) = cost;
  phase2.segment(d, d) = -cost;
  tab.set_objective(phase2);
  const PhaseOutcome out = run_phase(tab, art0, row_active, opt);
  if (out == PhaseOutcome::kUnbounded) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  Vector primal = Vector::Zero(n_cols);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(i)];
    if (bc >= 0 && row_active[static_cast<std::size_t>(i)]) {
      primal(bc) = tab.rhs(i);
    }
  }
  result.x = primal.head(d) - primal.segment(d, d);
  result.objective = cost.dot(result.x);
  result.status = out == PhaseOutcome::kOptimal ? LpStatus::kOptimal
                                                : LpStatus::kInfeasible;
  return result;
}

}  // namespace qempc
