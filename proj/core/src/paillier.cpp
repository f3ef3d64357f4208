#include "qempc/paillier.hpp"

#include <cmath>
#include <string>

#include "qempc/errors.hpp"

namespace qempc::he {
namespace {

std::uint64_t key_fingerprint(const mpz_class& n) {
  // Low 64 bits of n mixed with its size.
  mpz_class low = n & mpz_class("0xFFFFFFFFFFFFFFFF");
  std::uint64_t v = 0;
  mpz_export(&v, nullptr, -1, sizeof(v), 0, 0, low.get_mpz_t());
  return v ^ (static_cast<std::uint64_t>(mpz_sizeinbase(n.get_mpz_t(), 2)) << 56);
}

mpz_class random_prime(unsigned bits, Random& rng) {
  for (;;) {
    mpz_class cand = rng.bits(bits);
    mpz_setbit(cand.get_mpz_t(), bits - 1);
    mpz_setbit(cand.get_mpz_t(), bits - 2);
    mpz_class p;
    mpz_nextprime(p.get_mpz_t(), cand.get_mpz_t());
    if (mpz_sizeinbase(p.get_mpz_t(), 2) == bits &&
        mpz_probab_prime_p(p.get_mpz_t(), 40) > 0) {
      return p;
    }
  }
}

void require_same_key(const Ciphertext& c, const PublicKey& pk) {
  if (c.key_id != pk.id) throw KeyMismatch("ciphertext was produced under a different key");
}

}  // namespace

Random::Random(std::uint64_t seed) : state_(gmp_randinit_mt) {
  mpz_class s;
  mpz_import(s.get_mpz_t(), 1, -1, sizeof(seed), 0, 0, &seed);
  state_.seed(s);
}

mpz_class Random::below(const mpz_class& bound) { return state_.get_z_range(bound); }

mpz_class Random::bits(unsigned bits) { return state_.get_z_bits(bits); }

Keypair keygen(unsigned bits, Random& rng) {
  if (bits < 32 || bits % 2 != 0) {
    throw InvalidProblem("Paillier modulus size must be even and at least 32 bits");
  }
  for (;;) {
    const mpz_class p = random_prime(bits / 2, rng);
    const mpz_class q = random_prime(bits / 2, rng);
    if (p == q) continue;
    const mpz_class n = p * q;
    const mpz_class pm1 = p - 1;
    const mpz_class qm1 = q - 1;
    mpz_class phi = pm1 * qm1;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1) continue;

    Keypair kp;
    kp.pub.n = n;
    kp.pub.n_squared = n * n;
    kp.pub.bits = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
    kp.pub.id = key_fingerprint(n);
    mpz_lcm(kp.priv.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    if (mpz_invert(kp.priv.mu.get_mpz_t(), kp.priv.lambda.get_mpz_t(), n.get_mpz_t()) == 0) {
      continue;
    }
    return kp;
  }
}

Ciphertext encrypt(const mpz_class& z, const PublicKey& pk, Random& rng) {
  if (z < 0 || z >= pk.n) throw PlaintextRange("plaintext must lie in [0, n)");
  mpz_class r;
  mpz_class g;
  do {
    r = rng.below(pk.n);
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  } while (r == 0 || g != 1);
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n_squared.get_mpz_t());
  // (n+1)^z = 1 + z n  (mod n^2)
  mpz_class gz = (z * pk.n + 1) % pk.n_squared;
  Ciphertext c;
  c.value = (gz * rn) % pk.n_squared;
  c.key_id = pk.id;
  return c;
}

mpz_class decrypt(const Ciphertext& c, const Keypair& keys) {
  require_same_key(c, keys.pub);
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.value.get_mpz_t(), keys.priv.lambda.get_mpz_t(),
           keys.pub.n_squared.get_mpz_t());
  const mpz_class l = (u - 1) / keys.pub.n;
  return (l * keys.priv.mu) % keys.pub.n;
}

Ciphertext add(const Ciphertext& c1, const Ciphertext& c2, const PublicKey& pk) {
  require_same_key(c1, pk);
  require_same_key(c2, pk);
  Ciphertext out;
  out.value = (c1.value * c2.value) % pk.n_squared;
  out.key_id = pk.id;
  return out;
}

Ciphertext scalar_mul(const mpz_class& a, const Ciphertext& c, const PublicKey& pk) {
  require_same_key(c, pk);
  Ciphertext out;
  out.key_id = pk.id;
  mpz_class base = c.value;
  if (a < 0) {
    if (mpz_invert(base.get_mpz_t(), c.value.get_mpz_t(), pk.n_squared.get_mpz_t()) == 0) {
      throw CiphertextError("ciphertext is not invertible mod n^2");
    }
  }
  const mpz_class e = abs(a);
  mpz_powm(out.value.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), pk.n_squared.get_mpz_t());
  return out;
}

mpz_class FixedPointCodec::scale(int power) const {
  mpz_class s;
  mpz_ui_pow_ui(s.get_mpz_t(), rho, static_cast<unsigned long>(delta * power));
  return s;
}

void FixedPointCodec::validate() const {
  if (rho < 2 || gamma < 0 || delta < 0) {
    throw OverflowError("codec requires rho >= 2 and nonnegative gamma, delta");
  }
  mpz_class bound;
  mpz_ui_pow_ui(bound.get_mpz_t(), rho, static_cast<unsigned long>(gamma + 2 * delta));
  if (2 * bound >= n) {
    throw OverflowError("codec headroom violated: 2 rho^(gamma + 2 delta) >= n");
  }
}

mpz_class fp_quantize(double x, const FixedPointCodec& codec, int power) {
  if (!std::isfinite(x) || std::abs(x) > std::pow(static_cast<double>(codec.rho), codec.gamma)) {
    throw OverflowError("value " + std::to_string(x) + " exceeds rho^gamma");
  }
  const mpf_class scaled = mpf_class(x, 256) * mpf_class(codec.scale(power), 256);
  mpf_class shifted = scaled + mpf_class(0.5, 256);
  mpf_class rounded(0, 256);
  mpf_floor(rounded.get_mpf_t(), shifted.get_mpf_t());
  return mpz_class(rounded);
}

mpz_class fp_encode(double x, const FixedPointCodec& codec, int power) {
  mpz_class q = fp_quantize(x, codec, power);
  mpz_class mu;
  mpz_mod(mu.get_mpz_t(), q.get_mpz_t(), codec.n.get_mpz_t());
  return mu;
}

double fp_decode(const mpz_class& v, const FixedPointCodec& codec, int scale_power) {
  mpz_class signed_v = v;
  if (2 * v > codec.n) signed_v -= codec.n;
  const mpf_class num(signed_v, 512);
  const mpf_class den(codec.scale(scale_power), 512);
  const mpf_class q = num / den;
  return q.get_d();
}

IntMatrix quantize_gain(const Matrix& k, const FixedPointCodec& codec) {
  IntMatrix out;
  out.rows = k.rows();
  out.cols = k.cols();
  out.data.reserve(static_cast<std::size_t>(k.size()));
  for (Eigen::Index r = 0; r < k.rows(); ++r) {
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
      out.data.push_back(fp_quantize(k(r, c), codec, 1));
    }
  }
  return out;
}

unsigned gain_bits(const IntMatrix& k_hat) {
  unsigned best = 0;
  for (const auto& v : k_hat.data) {
    if (v == 0) continue;
    best = std::max(best, static_cast<unsigned>(mpz_sizeinbase(v.get_mpz_t(), 2)));
  }
  return best;
}

std::vector<Ciphertext> eval_affine(const IntMatrix& k_hat,
                                    std::span<const Ciphertext> x,
                                    std::span<const Ciphertext> b,
                                    const PublicKey& pk, PrimitiveCounts* counts) {
  if (static_cast<Eigen::Index>(x.size()) != k_hat.cols ||
      static_cast<Eigen::Index>(b.size()) != k_hat.rows) {
    throw InvalidProblem("eval_affine: dimension mismatch");
  }
  std::vector<Ciphertext> u;
  u.reserve(b.size());
  for (Eigen::Index j = 0; j < k_hat.rows; ++j) {
    Ciphertext acc = b[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < k_hat.cols; ++i) {
      const Ciphertext term = scalar_mul(k_hat.at(j, i), x[static_cast<std::size_t>(i)], pk);
      if (counts) ++counts->he_mul;
      acc = add(acc, term, pk);
      if (counts) ++counts->he_add;
    }
    u.push_back(std::move(acc));
  }
  return u;
}

std::vector<Ciphertext> he_eval_pwa(std::size_t sigma,
                                    const std::vector<IntMatrix>& library,
                                    std::span<const Ciphertext> x,
                                    std::span<const Ciphertext> b,
                                    const PublicKey& pk, PrimitiveCounts* counts) {
  if (sigma >= library.size()) {
    throw InvalidRegion("region index " + std::to_string(sigma) + " out of range");
  }
  return eval_affine(library[sigma], x, b, pk, counts);
}

void check_headroom(const std::vector<IntMatrix>& library, double x_max,
                    double b_max, const FixedPointCodec& codec) {
  codec.validate();
  const mpz_class x_hat = fp_quantize(x_max, codec, 1) + 1;
  const mpz_class b_hat = fp_quantize(b_max, codec, 2) + 1;
  const mpz_class half = codec.n / 2;
  for (const auto& k_hat : library) {
    for (Eigen::Index j = 0; j < k_hat.rows; ++j) {
      mpz_class bound = b_hat;
      for (Eigen::Index i = 0; i < k_hat.cols; ++i) bound += abs(k_hat.at(j, i)) * x_hat;
      if (bound >= half) {
        throw OverflowError("affine evaluation may wrap around the Paillier modulus");
      }
    }
  }
}

double fixed_point_budget(Eigen::Index n, double x_max, double k_max,
                          const FixedPointCodec& codec) {
  const double e = std::pow(static_cast<double>(codec.rho), -codec.delta);
  const double nn = static_cast<double>(n);
  // |K_hat x_hat - K x| <= n (e |x| + e |K| + e^2) per row, plus e^2 from b.
  return nn * (e * x_max + e * k_max + e * e) + e * e;
}

}  // namespace qempc::he
