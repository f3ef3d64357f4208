#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qempc::keys {

struct KeyConfig {
  std::size_t n = 0;
  std::size_t m = 0;
  // Bits per beta group.
  std::size_t w_b = 16;

  std::size_t d() const { return n + m; }
  std::size_t w_q() const { return d() * w_b; }
  // Throws InvalidProblem unless n, m >= 1 and 2 <= w_b <= 62.
  void validate() const;
};

// One cycle's shared key bits, group-major with the most significant bit of
// each group first.
struct KeyStream {
  std::uint64_t k = 0;
  std::vector<std::uint8_t> bits;
};

// Ideal Bell-pair channel: both endpoints measure identical uniform bits.
// Modeled as a counter-based generator keyed on (seed, k, bit position), so
// the sensor's and the actuator's instances agree without communicating.
class BellPairChannel {
 public:
  explicit BellPairChannel(std::uint64_t seed) : seed_(seed) {}

  KeyStream generate_key(std::uint64_t k, const KeyConfig& cfg) const;

 private:
  std::uint64_t seed_;
};

// Nonzero key coefficients. beta[0..n) serve the state components and
// beta[n..n+m) the offset components.
struct BetaVector {
  std::vector<std::int64_t> beta;
  std::size_t n = 0;

  std::int64_t state(std::size_t i) const { return beta.at(i); }
  std::int64_t offset(std::size_t j) const { return beta.at(n + j); }
  std::size_t m() const { return beta.size() - n; }
};

// beta = -(2^{w_b-1} + 1) b_{w_b-1} + sum_{j<w_b-1} 2^j b_j + 1, for a group
// given most significant bit first. Never zero.
std::int64_t beta_from_bits(std::span<const std::uint8_t> group);

// Throws KeyLengthError when the stream is not exactly w_q bits.
BetaVector betas(const KeyStream& key, const KeyConfig& cfg);

// Enforces one fresh key stream per cycle at a party.
class FreshnessGuard {
 public:
  // Throws KeyReuseError unless k exceeds every index seen before.
  void admit(std::uint64_t k);

 private:
  bool any_ = false;
  std::uint64_t last_ = 0;
};

}  // namespace qempc::keys
