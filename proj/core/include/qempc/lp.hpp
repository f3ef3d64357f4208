#pragma once

#include "qempc/linalg.hpp"

namespace qempc {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective = 0.0;
};

struct LpOptions {
  double pivot_tol = 1e-11;
  double cost_tol = 1e-11;
  // Phase-1 residual above which the constraint set is declared empty.
  double feasibility_tol = 1e-9;
  std::size_t max_pivots = 50000;
};

// Minimizes cost'x subject to a*x <= b with x free, using a dense two-phase
// tableau simplex with Bland's anti-cycling rule.
LpResult solve_lp(const Vector& cost, const Matrix& a, const Vector& b,
                  const LpOptions& options = {});

}  // namespace qempc
