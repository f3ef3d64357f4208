#include "qempc/qe_cipher.hpp"

#include <cmath>
#include <string>

#include "qempc/errors.hpp"

namespace qempc::qe {
namespace {

void check_beta(std::int64_t beta) {
  if (beta == 0) throw DomainError("key coefficient must be nonzero");
}

void check_word_width(unsigned w) {
  if (w < 1 || w > kMaxWordBits) throw RangeError("word width must lie in [1, 52]");
}

void check_cipher(double c, const char* where) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw CiphertextError(std::string(where) + ": ciphertext must be positive and finite");
  }
}

CipherVector encrypt_with(const Vector& values, const keys::BetaVector& betas,
                          std::size_t offset, PrimitiveCounts* counts) {
  if (offset + static_cast<std::size_t>(values.size()) > betas.beta.size()) {
    throw KeyLengthError("not enough key coefficients for the plaintext");
  }
  CipherVector out{Vector(values.size())};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const std::int64_t beta = betas.beta[offset + static_cast<std::size_t>(i)];
    if (std::abs(values(i) / static_cast<double>(beta)) > kMaxExponent) {
      throw MagnitudeError("component " + std::to_string(i) +
                               ": |z/beta| exceeds the exponent guard",
                           static_cast<std::size_t>(i));
    }
    out.entries(i) = enc_scalar(values(i), beta).value;
    if (counts) ++counts->enc;
  }
  return out;
}

}  // namespace

CipherScalar enc_scalar(double z, std::int64_t beta) {
  check_beta(beta);
  const double e = z / static_cast<double>(beta);
  if (!(std::abs(e) <= kMaxExponent)) {
    throw MagnitudeError("|z/beta| exceeds the exponent guard", 0);
  }
  return CipherScalar{std::exp(e)};
}

double dec_scalar(CipherScalar c, std::int64_t beta) {
  check_beta(beta);
  check_cipher(c.value, "dec_scalar");
  return static_cast<double>(beta) * std::log(c.value);
}

CipherVector enc_state(const Vector& x, const keys::BetaVector& betas,
                       PrimitiveCounts* counts) {
  if (static_cast<std::size_t>(x.size()) != betas.n) {
    throw KeyLengthError("state dimension differs from key state groups");
  }
  return encrypt_with(x, betas, 0, counts);
}

CipherVector enc_offset(const Vector& b, const keys::BetaVector& betas,
                        PrimitiveCounts* counts) {
  if (static_cast<std::size_t>(b.size()) != betas.m()) {
    throw KeyLengthError("offset dimension differs from key offset groups");
  }
  return encrypt_with(b, betas, betas.n, counts);
}

CipherMatrix con(const Matrix& k, const CipherVector& x, PrimitiveCounts* counts) {
  if (k.cols() != x.size()) throw InvalidProblem("con: gain/ciphertext dimension mismatch");
  CipherMatrix t{Matrix(k.rows(), k.cols())};
  for (Eigen::Index i = 0; i < x.size(); ++i) check_cipher(x.entries(i), "con");
  for (Eigen::Index j = 0; j < k.rows(); ++j) {
    for (Eigen::Index i = 0; i < k.cols(); ++i) {
      const double v = std::pow(x.entries(i), k(j, i));
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw CiphertextError("con: power overflowed or underflowed");
      }
      t.entries(j, i) = v;
      if (counts) ++counts->con;
    }
  }
  return t;
}

Vector dec_aggregate(const CipherMatrix& t, const keys::BetaVector& betas,
                     PrimitiveCounts* counts) {
  if (static_cast<std::size_t>(t.entries.cols()) != betas.n) {
    throw KeyLengthError("dec_aggregate: column count differs from key state groups");
  }
  Vector v = Vector::Zero(t.entries.rows());
  for (Eigen::Index j = 0; j < t.entries.rows(); ++j) {
    for (Eigen::Index i = 0; i < t.entries.cols(); ++i) {
      const double term = dec_scalar(CipherScalar{t.entries(j, i)},
                                     betas.beta[static_cast<std::size_t>(i)]);
      if (counts) ++counts->dec;
      if (i == 0) {
        v(j) = term;
      } else {
        v(j) += term;
        if (counts) ++counts->sums;
      }
    }
  }
  return v;
}

Vector dec_offset(const CipherVector& b, const keys::BetaVector& betas,
                  PrimitiveCounts* counts) {
  if (static_cast<std::size_t>(b.size()) != betas.m()) {
    throw KeyLengthError("dec_offset: dimension differs from key offset groups");
  }
  Vector out(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    out(j) = dec_scalar(CipherScalar{b.entries(j)},
                        betas.offset(static_cast<std::size_t>(j)));
    if (counts) ++counts->dec;
  }
  return out;
}

double g_map(double v) {
  if (v == 0.0) throw DomainError("g_map is undefined at 0");
  return v > 1.0 ? v : 2.0 - 1.0 / v;
}

double g_inv(double y) { return y > 1.0 ? y : 1.0 / (2.0 - y); }

double QuantizedWord::decode() const {
  return std::ldexp(static_cast<double>(code), -static_cast<int>(w - 1));
}

double max_representable(unsigned w) { return 2.0 - std::ldexp(1.0, -static_cast<int>(w - 1)); }

QuantizedWord quantize_stochastic(double v, unsigned w, std::mt19937_64& rng) {
  check_word_width(w);
  const double y = g_map(v);
  if (!(y >= 0.0 && y <= max_representable(w))) {
    throw RangeError("g(v) = " + std::to_string(y) + " is outside the " +
                     std::to_string(w) + "-bit word range");
  }
  const double scaled = std::ldexp(y, static_cast<int>(w - 1));
  const double floor_val = std::floor(scaled);
  const double eta = scaled - floor_val;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool up = eta > 0.0 && unif(rng) < eta;
  return QuantizedWord{static_cast<std::uint64_t>(floor_val) + (up ? 1U : 0U), w};
}

QuantizedWord quantize_saturating(double v, unsigned w, std::mt19937_64& rng,
                                  bool* saturated) {
  check_word_width(w);
  double y = g_map(v);
  const double top = max_representable(w);
  const bool clamp = !(y >= 0.0 && y <= top);
  if (clamp) y = y > top ? top : 0.0;
  if (saturated) *saturated = clamp;
  const double scaled = std::ldexp(y, static_cast<int>(w - 1));
  const double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) < 1e-12) {
    return QuantizedWord{static_cast<std::uint64_t>(nearest), w};
  }
  const double floor_val = std::floor(scaled);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool up = unif(rng) < scaled - floor_val;
  return QuantizedWord{static_cast<std::uint64_t>(floor_val) + (up ? 1U : 0U), w};
}

double quantized_roundtrip(double v, unsigned w, std::mt19937_64& rng) {
  return g_inv(quantize_stochastic(v, w, rng).decode());
}

}  // namespace qempc::qe
