#include "qempc/protocol.hpp"

#include <chrono>
#include <string>

#include "qempc/errors.hpp"
#include "qempc/wire.hpp"

namespace qempc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t locate_or_fault(const PwaController& ctrl, const Vector& x) {
  const auto sigma = locate_region(ctrl, x);
  if (!sigma) throw InfeasibleState("state lies outside every critical region");
  return *sigma;
}

void put_scalar(wire::ByteWriter& out, double c, const QeWire& wire, std::mt19937_64& rng,
                std::uint64_t& saturations) {
  if (!wire.quantized) {
    out.f64(c);
    return;
  }
  bool clamped = false;
  const qe::QuantizedWord word = qe::quantize_saturating(c, wire.w, rng, &clamped);
  if (clamped) ++saturations;
  out.bits(word.code, wire.w);
}

double get_scalar(wire::ByteReader& in, const QeWire& wire) {
  if (!wire.quantized) return in.f64();
  const qe::QuantizedWord word{in.bits(wire.w), wire.w};
  return qe::g_inv(word.decode());
}

Encoded finish(wire::ByteWriter& out, std::uint64_t saturations) {
  Encoded e;
  e.bytes = out.take();
  e.padding_bits = out.padding_bits();
  e.saturations = saturations;
  return e;
}

void check_sigma(std::uint32_t sigma, std::size_t count) {
  if (sigma >= count) {
    throw InvalidRegion("region index " + std::to_string(sigma) + " out of range");
  }
}

keys::KeyConfig key_config(const PwaController& ctrl, std::size_t w_b) {
  keys::KeyConfig cfg{static_cast<std::size_t>(ctrl.n), static_cast<std::size_t>(ctrl.m), w_b};
  cfg.validate();
  return cfg;
}

CostModel model_for(const PwaController& ctrl, const BackendConfig& cfg) {
  return predict_cost(static_cast<std::uint64_t>(ctrl.n), static_cast<std::uint64_t>(ctrl.m),
                      cfg.modulus_bits, cfg.p, library_gain_bits(ctrl, cfg.rho, cfg.delta));
}

// Mirrors the QE message flow with cleartext doubles and no primitives.
class PlaintextBackend final : public Backend {
 public:
  PlaintextBackend(const PwaController& ctrl, const BackendConfig& cfg)
      : ctrl_(ctrl), model_(model_for(ctrl, cfg)) {}

  BackendKind kind() const override { return BackendKind::kPlaintext; }

  CycleResult run_cycle(std::uint64_t k, const Vector& x) override {
    CycleResult res;
    res.metrics.model = model_;

    auto t0 = Clock::now();
    res.sigma = locate_or_fault(ctrl_, x);
    const CriticalRegion& region = ctrl_.regions[res.sigma];
    wire::ByteWriter s2c;
    s2c.u32(static_cast<std::uint32_t>(res.sigma));
    for (Eigen::Index i = 0; i < x.size(); ++i) s2c.f64(x(i));
    for (Eigen::Index j = 0; j < region.b.size(); ++j) s2c.f64(region.b(j));
    const std::vector<std::uint8_t> s2c_bytes = s2c.take();
    res.metrics.times.sensor = seconds_since(t0);
    tap_.record(k, Link::kSensorToCloud, s2c_bytes);

    t0 = Clock::now();
    wire::ByteReader in(s2c_bytes);
    const std::uint32_t sigma = in.u32();
    check_sigma(sigma, ctrl_.size());
    Vector xr(ctrl_.n);
    for (Eigen::Index i = 0; i < ctrl_.n; ++i) xr(i) = in.f64();
    Vector br(ctrl_.m);
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) br(j) = in.f64();
    in.expect_end();
    const Vector v = ctrl_.regions[sigma].k * xr;
    wire::ByteWriter c2a;
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) c2a.f64(v(j));
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) c2a.f64(br(j));
    const std::vector<std::uint8_t> c2a_bytes = c2a.take();
    res.metrics.times.cloud = seconds_since(t0);
    tap_.record(k, Link::kCloudToActuator, c2a_bytes);

    t0 = Clock::now();
    wire::ByteReader ain(c2a_bytes);
    res.u = Vector(ctrl_.m);
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) res.u(j) = ain.f64();
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) res.u(j) += ain.f64();
    ain.expect_end();
    res.metrics.times.actuator = seconds_since(t0);

    res.metrics.payload = {s2c_bytes.size() * 8, c2a_bytes.size() * 8};
    res.metrics.wire = res.metrics.payload;
    return res;
  }

 private:
  PwaController ctrl_;
  CostModel model_;
};

class QeBackend final : public Backend {
 public:
  QeBackend(const PwaController& ctrl, const BackendConfig& cfg, bool quantized)
      : n_(ctrl.n),
        m_(ctrl.m),
        sensor_(ctrl, key_config(ctrl, cfg.w_b), cfg.seed_keys),
        cloud_(gain_library(ctrl)),
        actuator_(key_config(ctrl, cfg.w_b), cfg.seed_keys),
        wire_{quantized, cfg.w},
        sensor_rng_(cfg.seed_quant),
        cloud_rng_(cfg.seed_quant ^ 0x9e3779b97f4a7c15ULL),
        model_(model_for(ctrl, cfg)) {
    if (quantized && (cfg.w < 1 || cfg.w > qe::kMaxWordBits)) {
      throw ConfigError("quantizer word width must lie in [1, 52]");
    }
  }

  BackendKind kind() const override {
    return wire_.quantized ? BackendKind::kQeQuantized : BackendKind::kQe;
  }

  CycleResult run_cycle(std::uint64_t k, const Vector& x) override {
    CycleResult res;
    res.metrics.model = model_;
    PrimitiveCounts& counts = res.metrics.counts;

    auto t0 = Clock::now();
    const MsgSensorToCloud msg1 = sensor_.step(k, x, &counts);
    const Encoded e1 = encode_message(msg1, wire_, sensor_rng_);
    res.metrics.times.sensor = seconds_since(t0);
    tap_.record(k, Link::kSensorToCloud, e1.bytes);
    res.sigma = msg1.sigma;

    t0 = Clock::now();
    const MsgSensorToCloud recv1 = decode_sensor_message(e1.bytes, n_, m_, wire_);
    const MsgCloudToActuator msg2 = cloud_.step(recv1, &counts);
    const Encoded e2 = encode_message(msg2, wire_, cloud_rng_);
    res.metrics.times.cloud = seconds_since(t0);
    tap_.record(k, Link::kCloudToActuator, e2.bytes);

    t0 = Clock::now();
    const MsgCloudToActuator recv2 = decode_cloud_message(e2.bytes, n_, m_, wire_);
    res.u = actuator_.step(k, recv2, &counts);
    res.metrics.times.actuator = seconds_since(t0);

    res.metrics.payload = {e1.payload_bits(), e2.payload_bits()};
    res.metrics.wire = {e1.bytes.size() * 8, e2.bytes.size() * 8};
    res.metrics.saturations = e1.saturations + e2.saturations;
    return res;
  }

 private:
  Eigen::Index n_;
  Eigen::Index m_;
  QeSensor sensor_;
  QeCloud cloud_;
  QeActuator actuator_;
  QeWire wire_;
  std::mt19937_64 sensor_rng_;
  std::mt19937_64 cloud_rng_;
  CostModel model_;
};

class PaillierBackend final : public Backend {
 public:
  PaillierBackend(const PwaController& ctrl, const BackendConfig& cfg)
      : ctrl_(ctrl), keygen_rng_(cfg.seed_paillier), enc_rng_(cfg.seed_paillier + 1) {
    keys_ = he::keygen(cfg.modulus_bits, keygen_rng_);
    codec_ = he::FixedPointCodec{cfg.rho, cfg.gamma, cfg.delta, keys_.pub.n};
    codec_.validate();
    for (const auto& region : ctrl_.regions) library_.push_back(he::quantize_gain(region.k, codec_));
    const double range = std::pow(static_cast<double>(cfg.rho), cfg.gamma);
    he::check_headroom(library_, range, range, codec_);
    model_ = model_for(ctrl, cfg);
  }

  BackendKind kind() const override { return BackendKind::kPaillier; }

  CycleResult run_cycle(std::uint64_t k, const Vector& x) override {
    CycleResult res;
    res.metrics.model = model_;
    PrimitiveCounts& counts = res.metrics.counts;
    const he::PublicKey& pk = keys_.pub;

    // Sensor: locate, encode at scale delta (x) and 2 delta (b), encrypt.
    auto t0 = Clock::now();
    res.sigma = locate_or_fault(ctrl_, x);
    HeMsgSensorToCloud msg1;
    msg1.sigma = static_cast<std::uint32_t>(res.sigma);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      msg1.x.push_back(he::encrypt(he::fp_encode(x(i), codec_, 1), pk, enc_rng_));
      ++counts.he_enc;
    }
    const Vector& b = ctrl_.regions[res.sigma].b;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      msg1.b.push_back(he::encrypt(he::fp_encode(b(j), codec_, 2), pk, enc_rng_));
      ++counts.he_enc;
    }
    const std::vector<std::uint8_t> s2c = encode_message(msg1);
    res.metrics.times.sensor = seconds_since(t0);
    tap_.record(k, Link::kSensorToCloud, s2c);

    // Cloud: public key and integer gains only.
    t0 = Clock::now();
    const HeMsgSensorToCloud recv1 = decode_he_sensor_message(s2c, ctrl_.n, ctrl_.m, pk.id);
    check_sigma(recv1.sigma, library_.size());
    HeMsgCloudToActuator msg2;
    msg2.u = he::he_eval_pwa(recv1.sigma, library_, recv1.x, recv1.b, pk, &counts);
    const std::vector<std::uint8_t> c2a = encode_message(msg2);
    res.metrics.times.cloud = seconds_since(t0);
    tap_.record(k, Link::kCloudToActuator, c2a);

    t0 = Clock::now();
    const HeMsgCloudToActuator recv2 = decode_he_cloud_message(c2a, ctrl_.m, pk.id);
    res.u = Vector(ctrl_.m);
    for (Eigen::Index j = 0; j < ctrl_.m; ++j) {
      res.u(j) = he::fp_decode(he::decrypt(recv2.u[static_cast<std::size_t>(j)], keys_),
                               codec_, 2);
      ++counts.he_dec;
    }
    res.metrics.times.actuator = seconds_since(t0);

    // Ciphertexts live mod n^2 and are accounted at 2L bits each.
    const std::uint64_t ct_bits = 2ULL * pk.bits;
    const auto n = static_cast<std::uint64_t>(ctrl_.n);
    const auto m = static_cast<std::uint64_t>(ctrl_.m);
    res.metrics.payload = {32 + (n + m) * ct_bits, m * ct_bits};
    res.metrics.wire = {s2c.size() * 8, c2a.size() * 8};
    return res;
  }

 private:
  PwaController ctrl_;
  he::Random keygen_rng_;
  he::Random enc_rng_;
  he::Keypair keys_;
  he::FixedPointCodec codec_;
  std::vector<he::IntMatrix> library_;
  CostModel model_;
};

}  // namespace

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kPlaintext: return "plaintext";
    case BackendKind::kQe: return "qe";
    case BackendKind::kQeQuantized: return "qe_quantized";
    case BackendKind::kPaillier: return "paillier";
  }
  return "unknown";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "plaintext") return BackendKind::kPlaintext;
  if (name == "qe") return BackendKind::kQe;
  if (name == "qe_quantized") return BackendKind::kQeQuantized;
  if (name == "paillier") return BackendKind::kPaillier;
  throw ConfigError("unknown backend '" + std::string(name) + "'");
}

void EavesdropLog::record(std::uint64_t k, Link link, std::vector<std::uint8_t> bytes) {
  const auto now = std::chrono::duration_cast<std::chrono::nanoseconds>(
      Clock::now().time_since_epoch());
  records_.push_back(TapRecord{k, link, std::move(bytes), now.count()});
}

GainLibrary gain_library(const PwaController& ctrl) {
  GainLibrary gains;
  gains.reserve(ctrl.size());
  for (const auto& region : ctrl.regions) gains.push_back(region.k);
  return gains;
}

MsgSensorToCloud sensor_step(const Vector& x, const PwaController& ctrl,
                             const keys::KeyStream& key, const keys::KeyConfig& cfg,
                             PrimitiveCounts* counts) {
  const std::size_t sigma = locate_or_fault(ctrl, x);
  const keys::BetaVector beta = keys::betas(key, cfg);
  MsgSensorToCloud msg;
  msg.sigma = static_cast<std::uint32_t>(sigma);
  msg.x = qe::enc_state(x, beta, counts);
  msg.b = qe::enc_offset(ctrl.regions[sigma].b, beta, counts);
  return msg;
}

MsgCloudToActuator cloud_step(const MsgSensorToCloud& msg, const GainLibrary& gains,
                              PrimitiveCounts* counts) {
  check_sigma(msg.sigma, gains.size());
  return MsgCloudToActuator{qe::con(gains[msg.sigma], msg.x, counts), msg.b};
}

Vector actuator_step(const MsgCloudToActuator& msg, const keys::KeyStream& key,
                     const keys::KeyConfig& cfg, PrimitiveCounts* counts) {
  const keys::BetaVector beta = keys::betas(key, cfg);
  const Vector v = qe::dec_aggregate(msg.t, beta, counts);
  const Vector b = qe::dec_offset(msg.b, beta, counts);
  if (counts) counts->sums += static_cast<std::uint64_t>(v.size());
  return v + b;
}

Encoded encode_message(const MsgSensorToCloud& msg, const QeWire& wire, std::mt19937_64& rng) {
  wire::ByteWriter out;
  std::uint64_t sat = 0;
  out.u32(msg.sigma);
  for (Eigen::Index i = 0; i < msg.x.size(); ++i) put_scalar(out, msg.x.entries(i), wire, rng, sat);
  for (Eigen::Index j = 0; j < msg.b.size(); ++j) put_scalar(out, msg.b.entries(j), wire, rng, sat);
  return finish(out, sat);
}

Encoded encode_message(const MsgCloudToActuator& msg, const QeWire& wire, std::mt19937_64& rng) {
  wire::ByteWriter out;
  std::uint64_t sat = 0;
  const Matrix& t = msg.t.entries;
  for (Eigen::Index j = 0; j < t.rows(); ++j) {
    for (Eigen::Index i = 0; i < t.cols(); ++i) put_scalar(out, t(j, i), wire, rng, sat);
  }
  for (Eigen::Index j = 0; j < msg.b.size(); ++j) put_scalar(out, msg.b.entries(j), wire, rng, sat);
  return finish(out, sat);
}

MsgSensorToCloud decode_sensor_message(std::span<const std::uint8_t> bytes, Eigen::Index n,
                                       Eigen::Index m, const QeWire& wire) {
  wire::ByteReader in(bytes);
  MsgSensorToCloud msg;
  msg.sigma = in.u32();
  msg.x.entries = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) msg.x.entries(i) = get_scalar(in, wire);
  msg.b.entries = Vector(m);
  for (Eigen::Index j = 0; j < m; ++j) msg.b.entries(j) = get_scalar(in, wire);
  in.expect_end();
  return msg;
}

MsgCloudToActuator decode_cloud_message(std::span<const std::uint8_t> bytes, Eigen::Index n,
                                        Eigen::Index m, const QeWire& wire) {
  wire::ByteReader in(bytes);
  MsgCloudToActuator msg;
  msg.t.entries = Matrix(m, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) msg.t.entries(j, i) = get_scalar(in, wire);
  }
  msg.b.entries = Vector(m);
  for (Eigen::Index j = 0; j < m; ++j) msg.b.entries(j) = get_scalar(in, wire);
  in.expect_end();
  return msg;
}

QeSensor::QeSensor(PwaController ctrl, keys::KeyConfig cfg, std::uint64_t key_seed)
    : ctrl_(std::move(ctrl)), cfg_(cfg), channel_(key_seed) {
  cfg_.validate();
}

MsgSensorToCloud QeSensor::step(std::uint64_t k, const Vector& x, PrimitiveCounts* counts) {
  guard_.admit(k);
  return sensor_step(x, ctrl_, channel_.generate_key(k, cfg_), cfg_, counts);
}

MsgCloudToActuator QeCloud::step(const MsgSensorToCloud& msg, PrimitiveCounts* counts) const {
  return cloud_step(msg, gains_, counts);
}

QeActuator::QeActuator(keys::KeyConfig cfg, std::uint64_t key_seed)
    : cfg_(cfg), channel_(key_seed) {
  cfg_.validate();
}

Vector QeActuator::step(std::uint64_t k, const MsgCloudToActuator& msg, PrimitiveCounts* counts) {
  guard_.admit(k);
  return actuator_step(msg, channel_.generate_key(k, cfg_), cfg_, counts);
}

std::vector<std::uint8_t> encode_message(const HeMsgSensorToCloud& msg) {
  wire::ByteWriter out;
  out.u32(msg.sigma);
  for (const auto& c : msg.x) out.big(c.value);
  for (const auto& c : msg.b) out.big(c.value);
  return out.take();
}

std::vector<std::uint8_t> encode_message(const HeMsgCloudToActuator& msg) {
  wire::ByteWriter out;
  for (const auto& c : msg.u) out.big(c.value);
  return out.take();
}

HeMsgSensorToCloud decode_he_sensor_message(std::span<const std::uint8_t> bytes,
                                            Eigen::Index n, Eigen::Index m,
                                            std::uint64_t key_id) {
  wire::ByteReader in(bytes);
  HeMsgSensorToCloud msg;
  msg.sigma = in.u32();
  for (Eigen::Index i = 0; i < n; ++i) msg.x.push_back(he::Ciphertext{in.big(), key_id});
  for (Eigen::Index j = 0; j < m; ++j) msg.b.push_back(he::Ciphertext{in.big(), key_id});
  in.expect_end();
  return msg;
}

HeMsgCloudToActuator decode_he_cloud_message(std::span<const std::uint8_t> bytes,
                                             Eigen::Index m, std::uint64_t key_id) {
  wire::ByteReader in(bytes);
  HeMsgCloudToActuator msg;
  for (Eigen::Index j = 0; j < m; ++j) msg.u.push_back(he::Ciphertext{in.big(), key_id});
  in.expect_end();
  return msg;
}

std::unique_ptr<Backend> make_backend(BackendKind kind, const PwaController& ctrl,
                                      const BackendConfig& cfg) {
  if (ctrl.size() == 0) throw EmptyController("controller has no regions");
  switch (kind) {
    case BackendKind::kPlaintext: return std::make_unique<PlaintextBackend>(ctrl, cfg);
    case BackendKind::kQe: return std::make_unique<QeBackend>(ctrl, cfg, false);
    case BackendKind::kQeQuantized: return std::make_unique<QeBackend>(ctrl, cfg, true);
    case BackendKind::kPaillier: return std::make_unique<PaillierBackend>(ctrl, cfg);
  }
  throw ConfigError("unknown backend");
}

unsigned library_gain_bits(const PwaController& ctrl, unsigned rho, int delta) {
  // gamma only bounds the input range; lift it so any finite gain encodes.
  const he::FixedPointCodec codec{rho, 1 << 20, delta, mpz_class(0)};
  unsigned bits = 0;
  for (const auto& region : ctrl.regions) {
    bits = std::max(bits, he::gain_bits(he::quantize_gain(region.k, codec)));
  }
  return bits;
}

}  // namespace qempc
