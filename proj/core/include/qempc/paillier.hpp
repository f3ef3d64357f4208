#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "qempc/linalg.hpp"
#include "qempc/metrics.hpp"

// Paillier cryptosystem with generator g = n + 1, plus the fixed-point codec
// used to carry real-valued controller data in Z_n.
namespace qempc::he {

// Seeded source of big random integers (Mersenne Twister).
class Random {
 public:
  explicit Random(std::uint64_t seed);

  // Uniform in [0, bound).
  mpz_class below(const mpz_class& bound);
  // Uniform `bits`-bit integer.
  mpz_class bits(unsigned bits);

 private:
  gmp_randclass state_;
};

struct PublicKey {
  mpz_class n;
  mpz_class n_squared;
  unsigned bits = 0;  // bit length of n
  std::uint64_t id = 0;
};

struct PrivateKey {
  mpz_class lambda;  // lcm(p - 1, q - 1)
  mpz_class mu;      // lambda^{-1} mod n
};

struct Keypair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  mpz_class value;  // in [0, n^2)
  std::uint64_t key_id = 0;
};

// Primes of bits/2 bits each with the two top bits set, checked with 40
// Miller-Rabin rounds. Sizes below 1024 bits are for tests only.
Keypair keygen(unsigned bits, Random& rng);

// c = (n+1)^z r^n mod n^2. Throws PlaintextRange unless 0 <= z < n.
Ciphertext encrypt(const mpz_class& z, const PublicKey& pk, Random& rng);
mpz_class decrypt(const Ciphertext& c, const Keypair& keys);

// Enc(z1) (+) Enc(z2) = Enc(z1 + z2). Throws KeyMismatch across keys.
Ciphertext add(const Ciphertext& c1, const Ciphertext& c2, const PublicKey& pk);
// a (.) Enc(z) = Enc(a z). Negative a goes through the modular inverse so the
// exponent stays |a| bits.
Ciphertext scalar_mul(const mpz_class& a, const Ciphertext& c, const PublicKey& pk);

// Grid with spacing rho^-delta covering [-rho^gamma, rho^gamma].
struct FixedPointCodec {
  unsigned rho = 2;
  int gamma = 4;
  int delta = 16;
  mpz_class n;

  // rho^(delta * power)
  mpz_class scale(int power) const;
  // Throws OverflowError unless 2 rho^(gamma + 2 delta) < n.
  void validate() const;
};

// round(x rho^(delta * power)) as a signed integer. Throws OverflowError when
// |x| > rho^gamma.
mpz_class fp_quantize(double x, const FixedPointCodec& codec, int power = 1);
// fp_quantize reduced into Z_n; negatives land in the upper half (n/2, n).
mpz_class fp_encode(double x, const FixedPointCodec& codec, int power = 1);
// Inverse of fp_encode; `scale_power` 2 decodes products of two scale-1
// values.
double fp_decode(const mpz_class& v, const FixedPointCodec& codec, int scale_power = 1);

// Dense matrix of signed integers (row-major).
struct IntMatrix {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<mpz_class> data;

  const mpz_class& at(Eigen::Index r, Eigen::Index c) const {
    return data[static_cast<std::size_t>(r * cols + c)];
  }
};

IntMatrix quantize_gain(const Matrix& k, const FixedPointCodec& codec);

// b_K: largest bit length of |K_hat| over the entries.
unsigned gain_bits(const IntMatrix& k_hat);

// Encrypted K_hat x + b at scale 2 delta: per output, n scalar
// multiplications and n additions.
std::vector<Ciphertext> eval_affine(const IntMatrix& k_hat,
                                    std::span<const Ciphertext> x,
                                    std::span<const Ciphertext> b,
                                    const PublicKey& pk,
                                    PrimitiveCounts* counts = nullptr);

// eval_affine on gain `sigma` of a library. Throws InvalidRegion.
std::vector<Ciphertext> he_eval_pwa(std::size_t sigma,
                                    const std::vector<IntMatrix>& library,
                                    std::span<const Ciphertext> x,
                                    std::span<const Ciphertext> b,
                                    const PublicKey& pk,
                                    PrimitiveCounts* counts = nullptr);

// Throws OverflowError if some |sum_i K_hat x_hat + b_hat| could reach n/2
// for |x| <= x_max and |b| <= b_max.
void check_headroom(const std::vector<IntMatrix>& library, double x_max,
                    double b_max, const FixedPointCodec& codec);

// Worst-case |u_he - u| per component when |x_i| <= x_max and |K| <= k_max,
// from the per-entry bound |g(x) - x| <= rho^-delta.
double fixed_point_budget(Eigen::Index n, double x_max, double k_max,
                          const FixedPointCodec& codec);

}  // namespace qempc::he
