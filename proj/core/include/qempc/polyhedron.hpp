#pragma once

#include <limits>

#include "qempc/linalg.hpp"

namespace qempc {

// The set {v : a * v <= b}. Zero rows means the whole space of dimension
// `a.cols()`.
struct Polyhedron {
  Matrix a;
  Vector b;

  Polyhedron() = default;
  Polyhedron(Matrix a_ineq, Vector b_ineq);

  static Polyhedron whole_space(Eigen::Index dim);
  // {v : lower <= v <= upper}, two rows per coordinate (upper first).
  static Polyhedron box(const Vector& lower, const Vector& upper);

  Eigen::Index dim() const { return a.cols(); }
  Eigen::Index rows() const { return a.rows(); }

  bool contains(const Vector& v, double tol = 1e-9) const;
  // Largest a_i*v - b_i; negative when v is strictly inside.
  double max_violation(const Vector& v) const;

  // Rows scaled to unit Euclidean norm. Rows with norm below `zero_tol` are
  // dropped when trivially satisfied; `ok` is cleared if such a row can never
  // be satisfied.
  Polyhedron normalized(bool* ok = nullptr, double zero_tol = 1e-12) const;

  // Drops rows implied by the others, testing each row in order against the
  // rows still kept.
  Polyhedron irredundant(double tol = 1e-9) const;

  // Stacks the rows of `other` below this one.
  Polyhedron intersect(const Polyhedron& other) const;
};

struct ChebyshevBall {
  Vector center;
  // +inf for unbounded interior; negative when the interior is empty.
  double radius = -std::numeric_limits<double>::infinity();
};

ChebyshevBall chebyshev_center(const Polyhedron& poly);

}  // namespace qempc
