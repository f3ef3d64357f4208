#include <gtest/gtest.h>

#include <random>

#include "qempc/errors.hpp"
#include "qempc/paillier.hpp"

using namespace qempc;
using namespace qempc::he;

namespace {

const Keypair& test_keys() {
  static const Keypair kp = [] {
    Random rng(99);
    return keygen(256, rng);
  }();
  return kp;
}

FixedPointCodec codec_for(const PublicKey& pk, int delta = 16) {
  FixedPointCodec c;
  c.delta = delta;
  c.n = pk.n;
  return c;
}

}  // namespace

TEST(Paillier, KeygenShape) {
  Random r1(1), r2(2);
  const Keypair a = keygen(256, r1);
  const Keypair b = keygen(256, r2);
  EXPECT_NE(a.pub.n, b.pub.n);
  for (const Keypair* kp : {&a, &b}) {
    const auto bits = mpz_sizeinbase(kp->pub.n.get_mpz_t(), 2);
    EXPECT_GE(bits, 255u);
    EXPECT_LE(bits, 256u);
    EXPECT_EQ(kp->pub.n_squared, kp->pub.n * kp->pub.n);
  }
  Random r3(1);
  EXPECT_EQ(keygen(256, r3).pub.n, a.pub.n);
}

TEST(Paillier, Roundtrip) {
  const Keypair& kp = test_keys();
  Random rng(5);
  EXPECT_EQ(decrypt(encrypt(0, kp.pub, rng), kp), 0);
  EXPECT_EQ(decrypt(encrypt(kp.pub.n - 1, kp.pub, rng), kp), kp.pub.n - 1);
  for (int i = 0; i < 100; ++i) {
    const mpz_class z = rng.below(kp.pub.n);
    ASSERT_EQ(decrypt(encrypt(z, kp.pub, rng), kp), z);
  }
}

TEST(Paillier, EncryptionIsRandomized) {
  const Keypair& kp = test_keys();
  Random rng(6);
  EXPECT_NE(encrypt(42, kp.pub, rng).value, encrypt(42, kp.pub, rng).value);
}

TEST(Paillier, PlaintextRangeChecked) {
  const Keypair& kp = test_keys();
  Random rng(7);
  EXPECT_THROW(encrypt(-1, kp.pub, rng), PlaintextRange);
  EXPECT_THROW(encrypt(kp.pub.n, kp.pub, rng), PlaintextRange);
}

TEST(Paillier, Homomorphisms) {
  const Keypair& kp = test_keys();
  Random rng(8);
  EXPECT_EQ(decrypt(add(encrypt(5, kp.pub, rng), encrypt(7, kp.pub, rng), kp.pub), kp), 12);
  const Ciphertext c = encrypt(1234, kp.pub, rng);
  EXPECT_EQ(decrypt(scalar_mul(0, c, kp.pub), kp), 0);
  EXPECT_EQ(decrypt(scalar_mul(1, c, kp.pub), kp), 1234);
  // Negative scalar lands in the upper half: -3 * 1234 mod n.
  EXPECT_EQ(decrypt(scalar_mul(-3, c, kp.pub), kp), kp.pub.n - 3702);
  for (int i = 0; i < 200; ++i) {
    const mpz_class z1 = rng.below(kp.pub.n), z2 = rng.below(kp.pub.n);
    const mpz_class a = rng.bits(64);
    const Ciphertext c1 = encrypt(z1, kp.pub, rng), c2 = encrypt(z2, kp.pub, rng);
    mpz_class sum = (z1 + z2) % kp.pub.n;
    mpz_class prod = (a * z1) % kp.pub.n;
    ASSERT_EQ(decrypt(add(c1, c2, kp.pub), kp), sum);
    ASSERT_EQ(decrypt(scalar_mul(a, c1, kp.pub), kp), prod);
  }
}

TEST(Paillier, KeyMismatch) {
  Random r(10);
  const Keypair other = keygen(256, r);
  const Keypair& kp = test_keys();
  ASSERT_NE(other.pub.id, kp.pub.id);
  const Ciphertext a = encrypt(1, kp.pub, r);
  const Ciphertext b = encrypt(1, other.pub, r);
  EXPECT_THROW(add(a, b, kp.pub), KeyMismatch);
  EXPECT_THROW(scalar_mul(2, b, kp.pub), KeyMismatch);
}

TEST(FixedPoint, Examples) {
  const Keypair& kp = test_keys();
  FixedPointCodec c = codec_for(kp.pub, 2);
  EXPECT_EQ(fp_encode(0.0, c), 0);
  EXPECT_EQ(fp_decode(0, c), 0.0);
  EXPECT_EQ(fp_quantize(1.25, c), 5);
  EXPECT_EQ(fp_encode(1.25, c), 5);
  EXPECT_EQ(fp_encode(-1.25, c), kp.pub.n - 5);
  EXPECT_EQ(fp_decode(kp.pub.n - 5, c), -1.25);
  EXPECT_EQ(fp_decode(fp_encode(1.25, c, 2), c, 2), 1.25);
}

TEST(FixedPoint, ErrorWithinSpacing) {
  const Keypair& kp = test_keys();
  std::mt19937_64 rng(11);
  for (int delta : {4, 10, 16}) {
    const FixedPointCodec c = codec_for(kp.pub, delta);
    const double spacing = std::ldexp(1.0, -delta);
    std::uniform_real_distribution<double> ud(-16.0, 16.0);
    for (int i = 0; i < 10000; ++i) {
      const double x = ud(rng);
      ASSERT_LE(std::abs(fp_decode(fp_encode(x, c), c) - x), spacing) << x;
    }
  }
}

TEST(FixedPoint, OverflowChecks) {
  const Keypair& kp = test_keys();
  const FixedPointCodec c = codec_for(kp.pub);
  EXPECT_THROW(fp_quantize(16.5, c), OverflowError);
  EXPECT_NO_THROW(fp_quantize(16.0, c));
  EXPECT_NO_THROW(c.validate());
  FixedPointCodec big = c;
  big.delta = 200;  // 2^(4 + 400) exceeds a 256-bit modulus
  EXPECT_THROW(big.validate(), OverflowError);
}

TEST(HeAffine, ExactScalarCase) {
  const Keypair& kp = test_keys();
  Random rng(12);
  const FixedPointCodec c = codec_for(kp.pub);
  const IntMatrix k = quantize_gain(Matrix::Constant(1, 1, 2.0), c);
  std::vector<Ciphertext> x{encrypt(fp_encode(3.0, c), kp.pub, rng)};
  std::vector<Ciphertext> b{encrypt(fp_encode(1.0, c, 2), kp.pub, rng)};
  PrimitiveCounts counts;
  const auto u = eval_affine(k, x, b, kp.pub, &counts);
  EXPECT_EQ(fp_decode(decrypt(u[0], kp), c, 2), 7.0);
  EXPECT_EQ(counts.he_mul, 1u);
  EXPECT_EQ(counts.he_add, 1u);

  const IntMatrix zero = quantize_gain(Matrix::Zero(1, 1), c);
  std::vector<Ciphertext> b0{encrypt(fp_encode(0.0, c, 2), kp.pub, rng)};
  EXPECT_EQ(fp_decode(decrypt(eval_affine(zero, x, b0, kp.pub)[0], kp), c, 2), 0.0);
}

TEST(HeAffine, MatchesIntegerArithmetic) {
  // Oracle: the same affine map evaluated on the quantized integers.
  const Keypair& kp = test_keys();
  Random rng(13);
  std::mt19937_64 g(14);
  std::uniform_real_distribution<double> ud(-2, 2);
  const FixedPointCodec c = codec_for(kp.pub, 12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix km = Matrix::NullaryExpr(2, 3, [&] { return ud(g); });
    const Vector x = Vector::NullaryExpr(3, [&] { return ud(g); });
    const Vector b = Vector::NullaryExpr(2, [&] { return ud(g); });
    const IntMatrix kq = quantize_gain(km, c);
    std::vector<Ciphertext> xc, bc;
    for (Eigen::Index i = 0; i < 3; ++i) xc.push_back(encrypt(fp_encode(x(i), c), kp.pub, rng));
    for (Eigen::Index j = 0; j < 2; ++j) bc.push_back(encrypt(fp_encode(b(j), c, 2), kp.pub, rng));
    std::vector<IntMatrix> lib{quantize_gain(Matrix::Zero(2, 3), c), kq};
    PrimitiveCounts counts;
    const auto u = he_eval_pwa(1, lib, xc, bc, kp.pub, &counts);
    EXPECT_EQ(counts.he_mul, 6u);
    EXPECT_EQ(counts.he_add, 6u);
    for (Eigen::Index j = 0; j < 2; ++j) {
      mpz_class acc = fp_quantize(b(j), c, 2);
      for (Eigen::Index i = 0; i < 3; ++i) acc += kq.at(j, i) * fp_quantize(x(i), c);
      mpz_class expected = acc % kp.pub.n;
      if (expected < 0) expected += kp.pub.n;
      EXPECT_EQ(decrypt(u[static_cast<std::size_t>(j)], kp), expected);
    }
    EXPECT_THROW(he_eval_pwa(2, lib, xc, bc, kp.pub), InvalidRegion);
  }
}

TEST(HeAffine, HeadroomViolation) {
  const Keypair& kp = test_keys();
  const FixedPointCodec c = codec_for(kp.pub, 60);  // 2^(4 + 120) fits a 256-bit n
  IntMatrix huge{1, 1, {mpz_class(1) << 200}};
  EXPECT_THROW(check_headroom({huge}, 16.0, 16.0, c), OverflowError);
  const IntMatrix small = quantize_gain(Matrix::Constant(1, 4, 0.5), c);
  EXPECT_NO_THROW(check_headroom({small}, 16.0, 16.0, c));
}

TEST(HeAffine, GainBits) {
  const Keypair& kp = test_keys();
  const FixedPointCodec c = codec_for(kp.pub, 4);
  // 1.5 * 16 = 24 -> 5 bits; -0.0625 * 16 = -1 -> 1 bit.
  Matrix k(1, 2);
  k << 1.5, -0.0625;
  EXPECT_EQ(gain_bits(quantize_gain(k, c)), 5u);
}
