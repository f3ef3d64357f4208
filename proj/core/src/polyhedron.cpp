#include "qempc/polyhedron.hpp"

#include <cmath>
#include <vector>

#include "qempc/errors.hpp"
#include "qempc/lp.hpp"

namespace qempc {

Polyhedron::Polyhedron(Matrix a_ineq, Vector b_ineq)
    : a(std::move(a_ineq)), b(std::move(b_ineq)) {
  if (a.rows() != b.size()) {
    throw InvalidProblem("polyhedron: row count of A and b differ");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw InvalidProblem("polyhedron: non-finite entries");
  }
}

Polyhedron Polyhedron::whole_space(Eigen::Index dim) {
  return Polyhedron(Matrix(0, dim), Vector(0));
}

Polyhedron Polyhedron::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) {
    throw InvalidProblem("box: bound dimensions differ");
  }
  const Eigen::Index d = lower.size();
  Matrix a = Matrix::Zero(2 * d, d);
  Vector b(2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(2 * i, i) = 1.0;
    b(2 * i) = upper(i);
    a(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lower(i);
  }
  return Polyhedron(std::move(a), std::move(b));
}

double Polyhedron::max_violation(const Vector& v) const {
  if (rows() == 0) return -std::numeric_limits<double>::infinity();
  return (a * v - b).maxCoeff();
}

bool Polyhedron::contains(const Vector& v, double tol) const {
  return rows() == 0 || max_violation(v) <= tol;
}

Polyhedron Polyhedron::normalized(bool* ok, double zero_tol) const {
  if (ok) *ok = true;
  std::vector<Eigen::Index> keep;
  Vector norms(rows());
  for (Eigen::Index i = 0; i < rows(); ++i) {
    norms(i) = a.row(i).norm();
    if (norms(i) > zero_tol) {
      keep.push_back(i);
    } else if (b(i) < -zero_tol && ok) {
      *ok = false;
    }
  }
  Matrix na(static_cast<Eigen::Index>(keep.size()), dim());
  Vector nb(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    const auto row = static_cast<Eigen::Index>(k);
    na.row(row) = a.row(i) / norms(i);
    nb(row) = b(i) / norms(i);
  }
  return Polyhedron(std::move(na), std::move(nb));
}

Polyhedron Polyhedron::irredundant(double tol) const {
  std::vector<bool> kept(static_cast<std::size_t>(rows()), true);
  for (Eigen::Index i = 0; i < rows(); ++i) {
    // Maximize a_i*v over the other kept rows, with row i relaxed by one so
    // the LP stays bounded along a_i.
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < rows(); ++j) {
      if (kept[static_cast<std::size_t>(j)]) ++count;
    }
    Matrix sa(count, dim());
    Vector sb(count);
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < rows(); ++j) {
      if (!kept[static_cast<std::size_t>(j)]) continue;
      sa.row(r) = a.row(j);
      sb(r) = j == i ? b(j) + 1.0 : b(j);
      ++r;
    }
    const LpResult lp = solve_lp(-a.row(i).transpose(), sa, sb);
    if (lp.status == LpStatus::kOptimal && -lp.objective <= b(i) + tol) {
      kept[static_cast<std::size_t>(i)] = false;
    }
  }
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    if (kept[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  Matrix na(static_cast<Eigen::Index>(idx.size()), dim());
  Vector nb(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    na.row(static_cast<Eigen::Index>(k)) = a.row(idx[k]);
    nb(static_cast<Eigen::Index>(k)) = b(idx[k]);
  }
  return Polyhedron(std::move(na), std::move(nb));
}

Polyhedron Polyhedron::intersect(const Polyhedron& other) const {
  if (other.dim() != dim()) {
    throw InvalidProblem("intersect: dimension mismatch");
  }
  Matrix na(rows() + other.rows(), dim());
  Vector nb(rows() + other.rows());
  na << a, other.a;
  nb << b, other.b;
  return Polyhedron(std::move(na), std::move(nb));
}

ChebyshevBall chebyshev_center(const Polyhedron& poly) {
  const Eigen::Index d = poly.dim();
  ChebyshevBall ball;
  if (poly.rows() == 0) {
    ball.center = Vector::Zero(d);
    ball.radius = std::numeric_limits<double>::infinity();
    return ball;
  }
  // max r  s.t.  a_i*c + ||a_i|| r <= b_i
  Matrix a(poly.rows(), d + 1);
  a.leftCols(d) = poly.a;
  a.col(d) = poly.a.rowwise().norm();
  Vector cost = Vector::Zero(d + 1);
  cost(d) = -1.0;

  LpResult lp = solve_lp(cost, a, poly.b);
  if (lp.status == LpStatus::kInfeasible) {
    // Only possible through a zero row with negative rhs.
    ball.center = Vector::Zero(d);
    return ball;
  }
  if (lp.status == LpStatus::kUnbounded) {
    Matrix capped(a.rows() + 1, d + 1);
    capped.topRows(a.rows()) = a;
    capped.row(a.rows()).setZero();
    capped(a.rows(), d) = 1.0;
    Vector cb(poly.b.size() + 1);
    cb << poly.b, 1.0;
    lp = solve_lp(cost, capped, cb);
    ball.center = lp.x.head(d);
    ball.radius = std::numeric_limits<double>::infinity();
    return ball;
  }
  ball.center = lp.x.head(d);
  ball.radius = lp.x(d);
  return ball;
}

}  // namespace qempc
