#pragma once

#include <cstdint>
#include <random>

#include "qempc/linalg.hpp"
#include "qempc/metrics.hpp"
#include "qempc/quantum_keys.hpp"

namespace qempc::qe {

// exp(z / beta); always positive and finite.
struct CipherScalar {
  double value = 1.0;
};

struct CipherVector {
  Vector entries;

  Eigen::Index size() const { return entries.size(); }
};

// Entry (j, i) is x~_i ^ K_{j,i}.
struct CipherMatrix {
  Matrix entries;
};

// |z / beta| above this would leave the double exponent range.
inline constexpr double kMaxExponent = 700.0;

CipherScalar enc_scalar(double z, std::int64_t beta);
double dec_scalar(CipherScalar c, std::int64_t beta);

// Componentwise encryption with beta_0..beta_{n-1}. `counts` (optional)
// receives one f_Enc per component.
CipherVector enc_state(const Vector& x, const keys::BetaVector& betas,
                       PrimitiveCounts* counts = nullptr);
// Offsets use beta_{n}..beta_{n+m-1}.
CipherVector enc_offset(const Vector& b, const keys::BetaVector& betas,
                        PrimitiveCounts* counts = nullptr);

// Cloud-side evaluation. Takes no key material.
CipherMatrix con(const Matrix& k, const CipherVector& x,
                 PrimitiveCounts* counts = nullptr);

// v_j = sum_i beta_i ln(t~_{j,i}); one f_Dec per entry and n - 1 sums per row.
Vector dec_aggregate(const CipherMatrix& t, const keys::BetaVector& betas,
                     PrimitiveCounts* counts = nullptr);
Vector dec_offset(const CipherVector& b, const keys::BetaVector& betas,
                  PrimitiveCounts* counts = nullptr);

// y = v for v > 1, y = 2 - 1/v otherwise. Throws DomainError at v = 0.
double g_map(double v);
// Inverse of g_map on (0, inf).
double g_inv(double y);

// w-bit word a_{w-1} ... a_0 decoding to xi = sum_j 2^{-j} a_j. Stored as the
// integer code = xi * 2^{w-1}, so a_0 is the most significant bit of `code`.
struct QuantizedWord {
  std::uint64_t code = 0;
  unsigned w = 0;

  double decode() const;
  bool bit(unsigned j) const { return (code >> (w - 1 - j)) & 1U; }
};

inline constexpr unsigned kMaxWordBits = 52;

// Largest representable y for a w-bit word: 2 - 2^{-(w-1)}.
double max_representable(unsigned w);

// Stochastic rounding of y = g_map(v) onto the grid 2^{-(w-1)} Z: rounds up
// with probability equal to the fractional part. Throws RangeError when y is
// outside [0, max_representable(w)].
QuantizedWord quantize_stochastic(double v, unsigned w, std::mt19937_64& rng);

// Wire variant: clamps y into the word range instead of throwing and reports
// the clamp through `saturated`. Values within 1e-12 of a grid point snap to
// it, so re-quantizing a decoded word reproduces the same code.
QuantizedWord quantize_saturating(double v, unsigned w, std::mt19937_64& rng,
                                  bool* saturated);

// g_inv(decode(quantize_stochastic(v, w, rng))).
double quantized_roundtrip(double v, unsigned w, std::mt19937_64& rng);

}  // namespace qempc::qe
