#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qempc/linalg.hpp"
#include "qempc/polyhedron.hpp"

namespace qempc {

// x(k+1) = A x(k) + B u(k),  y(k) = C x(k)
struct LtiSystem {
  Matrix a;
  Matrix b;
  Matrix c_out;

  Eigen::Index n() const { return a.rows(); }
  Eigen::Index m() const { return b.cols(); }
  Eigen::Index p() const { return c_out.rows(); }

  void validate() const;
};

// Finite-horizon LQ problem with polyhedral state, input and terminal sets.
struct MpcSpec {
  int horizon = 1;
  Matrix q;
  Matrix r;
  Matrix p_term;
  Polyhedron state_set;
  Polyhedron input_set;
  Polyhedron terminal_set;

  void validate(const LtiSystem& sys) const;
};

// min_z 1/2 z'Hz + x'F'z  s.t.  Gz <= Ex + h,  with z = [u_0; ...; u_{N-1}].
//
// Constraint rows are stacked in a fixed order:
//   1. input set rows for u_0, u_1, ..., u_{N-1}
//   2. state set rows for x_1, ..., x_{N-1}
//   3. terminal set rows for x_N
// Rows whose G part is identically zero are kept so indices stay stable.
struct CondensedQp {
  Matrix h_mat;     // H, (mN)x(mN)
  Matrix f_mat;     // F, (mN)x n
  Matrix g_mat;     // G, q x (mN)
  Matrix e_mat;     // E, q x n
  Vector h_vec;     // h, q
  Matrix selector;  // [I_m 0 ... 0], m x (mN)
  // Admissible parameter set (the state set applied to x itself). Bounds
  // every critical region; not part of G.
  Polyhedron parameter_set;

  Eigen::Index n() const { return f_mat.cols(); }
  Eigen::Index m() const { return selector.rows(); }
  Eigen::Index nz() const { return h_mat.rows(); }
  Eigen::Index q() const { return g_mat.rows(); }
};

struct SynthesisTolerances {
  double feasibility = 1e-9;
  double rank = 1e-10;
  double chebyshev_radius = 1e-9;
  // Minimum eigenvalue required of R and H.
  double positive_definite = 1e-10;
};

CondensedQp condense(const LtiSystem& sys, const MpcSpec& spec,
                     const SynthesisTolerances& tol = {});

struct QpSolution {
  Vector z;
  // Sorted indices of the optimal working set.
  std::vector<std::size_t> active_set;
  // One multiplier per constraint row; zero outside the active set.
  Vector multipliers;
  double kkt_residual = 0.0;
};

// Primal active-set solver started from a phase-1 LP point. Throws
// InfeasibleError if Gz <= Ex + h has no solution.
QpSolution solve_qp_oracle(const CondensedQp& qp, const Vector& x,
                           const SynthesisTolerances& tol = {});

struct CriticalRegion {
  Polyhedron poly;  // normalized, irredundant
  Matrix k;
  Vector b;
  std::vector<std::size_t> active_set;

  Vector eval(const Vector& x) const { return k * x + b; }
};

struct PwaController {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<CriticalRegion> regions;

  std::size_t size() const { return regions.size(); }
};

struct EnumerationStats {
  std::size_t candidates = 0;     // active sets examined
  std::size_t degenerate = 0;     // rank-deficient G_A, skipped with subtree
  std::size_t never_active = 0;   // constraints cannot be jointly active
  std::size_t empty = 0;          // radius at or below the cutoff
  std::size_t duplicates = 0;     // merged into a lower-index region
};

// Exhaustive active-set enumeration with LICQ pruning. Regions come back
// ordered by (active-set size, lexicographic active set).
PwaController enumerate_regions(const CondensedQp& qp,
                                const SynthesisTolerances& tol = {},
                                EnumerationStats* stats = nullptr);

// Lowest region index containing x within `tol`.
std::optional<std::size_t> locate_region(const PwaController& ctrl,
                                         const Vector& x, double tol = 1e-9);

Vector eval_pwa(const PwaController& ctrl, std::size_t sigma, const Vector& x);

}  // namespace qempc
