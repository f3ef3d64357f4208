#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "qempc/linalg.hpp"
#include "qempc/metrics.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/paillier.hpp"
#include "qempc/qe_cipher.hpp"
#include "qempc/quantum_keys.hpp"

namespace qempc {

enum class BackendKind { kPlaintext, kQe, kQeQuantized, kPaillier };

std::string_view backend_name(BackendKind kind);
// Accepts plaintext, qe, qe_quantized, paillier. Throws ConfigError.
BackendKind parse_backend(std::string_view name);

enum class Link : std::uint8_t { kSensorToCloud, kCloudToActuator };

struct TapRecord {
  std::uint64_t k = 0;
  Link link = Link::kSensorToCloud;
  std::vector<std::uint8_t> bytes;
  std::int64_t timestamp_ns = 0;  // steady clock
};

// Copies of every encoded message on both links. Append-only.
class EavesdropLog {
 public:
  void record(std::uint64_t k, Link link, std::vector<std::uint8_t> bytes);
  const std::vector<TapRecord>& records() const { return records_; }

 private:
  std::vector<TapRecord> records_;
};

using GainLibrary = std::vector<Matrix>;
GainLibrary gain_library(const PwaController& ctrl);

// ---- QE messages and party steps ----

struct MsgSensorToCloud {
  std::uint32_t sigma = 0;
  qe::CipherVector x;
  qe::CipherVector b;
};

struct MsgCloudToActuator {
  qe::CipherMatrix t;
  qe::CipherVector b;
};

// Locates x, encrypts it and the region offset. Throws InfeasibleState when
// x lies in no region.
MsgSensorToCloud sensor_step(const Vector& x, const PwaController& ctrl,
                             const keys::KeyStream& key, const keys::KeyConfig& cfg,
                             PrimitiveCounts* counts = nullptr);

// t~ = con(K^(sigma), x~); b~ forwarded unchanged. Throws InvalidRegion.
MsgCloudToActuator cloud_step(const MsgSensorToCloud& msg, const GainLibrary& gains,
                              PrimitiveCounts* counts = nullptr);

// u = dec_aggregate(t~) + dec(b~); m final additions.
Vector actuator_step(const MsgCloudToActuator& msg, const keys::KeyStream& key,
                     const keys::KeyConfig& cfg, PrimitiveCounts* counts = nullptr);

// Scalars go out as IEEE-754 doubles, or as w-bit words of g(c) packed MSB
// first when `quantized` is set.
struct QeWire {
  bool quantized = false;
  unsigned w = 16;
};

struct Encoded {
  std::vector<std::uint8_t> bytes;
  std::size_t padding_bits = 0;
  std::uint64_t saturations = 0;

  std::uint64_t payload_bits() const { return bytes.size() * 8 - padding_bits; }
};

// `rng` drives stochastic rounding and is only read when quantized.
Encoded encode_message(const MsgSensorToCloud& msg, const QeWire& wire, std::mt19937_64& rng);
Encoded encode_message(const MsgCloudToActuator& msg, const QeWire& wire, std::mt19937_64& rng);
MsgSensorToCloud decode_sensor_message(std::span<const std::uint8_t> bytes, Eigen::Index n,
                                       Eigen::Index m, const QeWire& wire);
MsgCloudToActuator decode_cloud_message(std::span<const std::uint8_t> bytes, Eigen::Index n,
                                        Eigen::Index m, const QeWire& wire);

class QeSensor {
 public:
  QeSensor(PwaController ctrl, keys::KeyConfig cfg, std::uint64_t key_seed);
  // Throws KeyReuseError if k does not increase.
  MsgSensorToCloud step(std::uint64_t k, const Vector& x, PrimitiveCounts* counts);

 private:
  PwaController ctrl_;
  keys::KeyConfig cfg_;
  keys::BellPairChannel channel_;
  keys::FreshnessGuard guard_;
};

// Holds the gain library only: no key material, no plaintext state.
class QeCloud {
 public:
  explicit QeCloud(GainLibrary gains) : gains_(std::move(gains)) {}
  MsgCloudToActuator step(const MsgSensorToCloud& msg, PrimitiveCounts* counts) const;

 private:
  GainLibrary gains_;
};

class QeActuator {
 public:
  QeActuator(keys::KeyConfig cfg, std::uint64_t key_seed);
  Vector step(std::uint64_t k, const MsgCloudToActuator& msg, PrimitiveCounts* counts);

 private:
  keys::KeyConfig cfg_;
  keys::BellPairChannel channel_;
  keys::FreshnessGuard guard_;
};

// ---- Paillier messages ----

struct HeMsgSensorToCloud {
  std::uint32_t sigma = 0;
  std::vector<he::Ciphertext> x;  // scale delta
  std::vector<he::Ciphertext> b;  // scale 2 delta
};

struct HeMsgCloudToActuator {
  std::vector<he::Ciphertext> u;  // scale 2 delta
};

std::vector<std::uint8_t> encode_message(const HeMsgSensorToCloud& msg);
std::vector<std::uint8_t> encode_message(const HeMsgCloudToActuator& msg);
HeMsgSensorToCloud decode_he_sensor_message(std::span<const std::uint8_t> bytes,
                                            Eigen::Index n, Eigen::Index m,
                                            std::uint64_t key_id);
HeMsgCloudToActuator decode_he_cloud_message(std::span<const std::uint8_t> bytes,
                                             Eigen::Index m, std::uint64_t key_id);

// ---- Backends ----

struct BackendConfig {
  std::uint64_t seed_keys = 1;
  std::uint64_t seed_quant = 2;
  std::uint64_t seed_paillier = 3;
  std::size_t w_b = 16;             // bits per key coefficient
  unsigned w = 16;                  // quantizer word bits
  unsigned p = 64;                  // precision in the QE cost model
  unsigned modulus_bits = 1024;     // Paillier L
  unsigned rho = 2;
  int gamma = 4;
  int delta = 16;
};

struct CycleResult {
  std::size_t sigma = 0;
  Vector u;
  CycleMetrics metrics;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  // One S -> C -> A pass. Throws InfeasibleState if x lies in no region.
  virtual CycleResult run_cycle(std::uint64_t k, const Vector& x) = 0;
  const EavesdropLog& tap() const { return tap_; }

 protected:
  EavesdropLog tap_;
};

std::unique_ptr<Backend> make_backend(BackendKind kind, const PwaController& ctrl,
                                      const BackendConfig& cfg);

// b_K over the library at spacing rho^-delta (no range check on K).
unsigned library_gain_bits(const PwaController& ctrl, unsigned rho, int delta);

}  // namespace qempc
