#include "qempc/quantum_keys.hpp"

#include <string>

#include "qempc/errors.hpp"

namespace qempc::keys {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t block_word(std::uint64_t seed, std::uint64_t k, std::uint64_t block) {
  return splitmix64(splitmix64(splitmix64(seed) ^ k) ^ block);
}

}  // namespace

void KeyConfig::validate() const {
  if (n == 0 || m == 0) throw InvalidProblem("key config: n and m must be positive");
  if (w_b < 2 || w_b > 62) {
    throw InvalidProblem("key config: w_b must lie in [2, 62], got " +
                         std::to_string(w_b));
  }
}

KeyStream BellPairChannel::generate_key(std::uint64_t k, const KeyConfig& cfg) const {
  cfg.validate();
  KeyStream key;
  key.k = k;
  key.bits.resize(cfg.w_q());
  std::uint64_t word = 0;
  for (std::size_t pos = 0; pos < key.bits.size(); ++pos) {
    if (pos % 64 == 0) word = block_word(seed_, k, pos / 64);
    key.bits[pos] = static_cast<std::uint8_t>((word >> (63 - pos % 64)) & 1U);
  }
  return key;
}

std::int64_t beta_from_bits(std::span<const std::uint8_t> group) {
  const std::size_t w = group.size();
  if (w < 2 || w > 62) throw KeyLengthError("beta group width must lie in [2, 62]");
  const std::int64_t top = group[0] ? 1 : 0;
  std::int64_t low = 0;
  for (std::size_t i = 1; i < w; ++i) {
    low = (low << 1) | (group[i] ? 1 : 0);
  }
  const std::int64_t half = std::int64_t{1} << (w - 1);
  return -(half + 1) * top + low + 1;
}

BetaVector betas(const KeyStream& key, const KeyConfig& cfg) {
  cfg.validate();
  if (key.bits.size() != cfg.w_q()) {
    throw KeyLengthError("key stream has " + std::to_string(key.bits.size()) +
                         " bits, expected " + std::to_string(cfg.w_q()));
  }
  BetaVector out;
  out.n = cfg.n;
  out.beta.reserve(cfg.d());
  const std::span<const std::uint8_t> all(key.bits);
  for (std::size_t g = 0; g < cfg.d(); ++g) {
    out.beta.push_back(beta_from_bits(all.subspan(g * cfg.w_b, cfg.w_b)));
  }
  return out;
}

void FreshnessGuard::admit(std::uint64_t k) {
  if (any_ && k <= last_) {
    throw KeyReuseError("key stream for cycle " + std::to_string(k) +
                        " is not fresh (last used " + std::to_string(last_) + ")");
  }
  any_ = true;
  last_ = k;
}

}  // namespace qempc::keys
