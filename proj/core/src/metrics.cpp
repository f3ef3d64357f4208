#include "qempc/metrics.hpp"

#include <cmath>

#include "qempc/errors.hpp"

namespace qempc {

PrimitiveCounts& PrimitiveCounts::operator+=(const PrimitiveCounts& o) {
  enc += o.enc;
  con += o.con;
  dec += o.dec;
  sums += o.sums;
  he_enc += o.he_enc;
  he_dec += o.he_dec;
  he_add += o.he_add;
  he_mul += o.he_mul;
  return *this;
}

PrimitiveCounts qe_counts_closed_form(std::uint64_t n, std::uint64_t m) {
  PrimitiveCounts c;
  c.enc = n + m;
  c.con = m * n;
  c.dec = m * n + m;
  c.sums = m * n;
  return c;
}

PrimitiveCounts paillier_counts_closed_form(std::uint64_t n, std::uint64_t m) {
  PrimitiveCounts c;
  c.he_enc = n + m;
  c.he_mul = m * n;
  c.he_add = m * n;
  c.he_dec = m;
  return c;
}

CostModel predict_cost(std::uint64_t n, std::uint64_t m, std::uint64_t modulus_bits,
                       std::uint64_t precision_bits, std::uint64_t gain_bits) {
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double l = static_cast<double>(modulus_bits);
  const double p = static_cast<double>(precision_bits);
  const double bk = static_cast<double>(gain_bits);
  const double l2 = l * l;
  const double l3 = l2 * l;
  const double p2 = p * p;
  const double p3 = p2 * p;

  CostModel c;
  c.he_total = (nn + 2.0 * mm) * l3 + mm * nn * (bk + 1.0) * l2;
  c.qe_total = (mm * nn + nn + mm) * p3;
  c.he_party.sensor = (nn + mm) * l3;
  c.he_party.controller = mm * nn * (bk + 1.0) * l2;
  c.he_party.actuator = mm * l3;
  c.qe_party.sensor = (nn + mm) * p3;
  c.qe_party.controller = mm * nn * (p3 + p2);
  c.qe_party.actuator = (mm * nn + mm) * p3 + mm * nn * p2;
  return c;
}

AccuracyAlignment align_accuracy(double eps_q, unsigned rho) {
  if (!(eps_q > 0.0 && eps_q < 1.0)) {
    throw InvalidProblem("accuracy target must lie in (0, 1)");
  }
  if (rho < 2) throw InvalidProblem("fixed-point base must be at least 2");
  // Exact ceilings by counting powers instead of taking logarithms.
  auto smallest_exponent = [eps_q](double base) {
    int e = 0;
    double power = 1.0;
    while (power * eps_q < 1.0) {
      power *= base;
      ++e;
    }
    return e;
  };
  AccuracyAlignment a;
  a.delta = smallest_exponent(static_cast<double>(rho));
  a.w = smallest_exponent(2.0);
  a.p_min = a.w;
  return a;
}

}  // namespace qempc
