#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "qempc/errors.hpp"
#include "qempc/mpqp.hpp"
#include "qempc/protocol.hpp"
#include "qempc/simulation.hpp"

using namespace qempc;

namespace {

PwaController single_region(Eigen::Index n, Eigen::Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1, 1);
  PwaController ctrl;
  ctrl.n = n;
  ctrl.m = m;
  CriticalRegion r;
  r.poly = Polyhedron::whole_space(n);
  r.k = Matrix::NullaryExpr(m, n, [&] { return ud(rng); });
  r.b = Vector::NullaryExpr(m, [&] { return ud(rng); });
  ctrl.regions.push_back(r);
  return ctrl;
}

const PwaController& benchmark_controller() {
  static const PwaController ctrl = [] {
    const Scenario s = double_integrator_benchmark();
    return enumerate_regions(condense(s.sys, s.mpc));
  }();
  return ctrl;
}

BackendConfig small_paillier() {
  BackendConfig cfg;
  cfg.modulus_bits = 256;
  return cfg;
}

}  // namespace

TEST(Protocol, SensorStepZeroStateZeroOffset) {
  std::mt19937_64 rng(1);
  PwaController ctrl = single_region(2, 1, rng);
  ctrl.regions[0].b.setZero();
  const keys::KeyConfig cfg{2, 1, 16};
  const keys::KeyStream key = keys::BellPairChannel(3).generate_key(0, cfg);
  PrimitiveCounts counts;
  const MsgSensorToCloud msg = sensor_step(Vector::Zero(2), ctrl, key, cfg, &counts);
  EXPECT_EQ(msg.x.entries, Vector::Ones(2));
  EXPECT_EQ(msg.b.entries, Vector::Ones(1));
  EXPECT_EQ(counts.enc, 3u);
}

TEST(Protocol, FreshKeysGiveFreshCiphertexts) {
  const PwaController& ctrl = benchmark_controller();
  QeSensor sensor(ctrl, keys::KeyConfig{2, 1, 16}, 5);
  Vector x(2);
  x << 0.3, -0.2;
  const auto a = sensor.step(0, x, nullptr);
  const auto b = sensor.step(1, x, nullptr);
  EXPECT_NE(a.x.entries, b.x.entries);
  EXPECT_THROW(sensor.step(1, x, nullptr), KeyReuseError);
}

TEST(Protocol, OutsideEveryRegionThrows) {
  const PwaController& ctrl = benchmark_controller();
  QeSensor sensor(ctrl, keys::KeyConfig{2, 1, 16}, 5);
  Vector x(2);
  x << 40, 40;
  EXPECT_THROW(sensor.step(0, x, nullptr), InfeasibleState);
}

TEST(Protocol, CloudStep) {
  MsgSensorToCloud msg;
  msg.sigma = 0;
  msg.x.entries = Vector::Constant(3, 2.5);
  msg.b.entries = Vector::Constant(2, 0.7);
  PrimitiveCounts counts;
  const MsgCloudToActuator out = cloud_step(msg, GainLibrary{Matrix::Zero(2, 3)}, &counts);
  EXPECT_EQ(out.t.entries, Matrix::Ones(2, 3));
  EXPECT_EQ(out.b.entries, msg.b.entries);
  EXPECT_EQ(counts.con, 6u);
  msg.sigma = 1;
  EXPECT_THROW(cloud_step(msg, GainLibrary{Matrix::Zero(2, 3)}), InvalidRegion);
}

TEST(Protocol, ActuatorAllOnesIsZero) {
  const keys::KeyConfig cfg{3, 2, 16};
  const keys::KeyStream key = keys::BellPairChannel(9).generate_key(4, cfg);
  MsgCloudToActuator msg;
  msg.t.entries = Matrix::Ones(2, 3);
  msg.b.entries = Vector::Ones(2);
  PrimitiveCounts counts;
  EXPECT_EQ(actuator_step(msg, key, cfg, &counts), Vector::Zero(2));
  EXPECT_EQ(counts.dec, 8u);
  EXPECT_EQ(counts.sums, 6u);
}

TEST(Protocol, CloudHoldsOnlyTheGainLibrary) {
  // The cloud party is a gain library and nothing else: no key channel, no
  // controller partition, no plaintext buffers.
  static_assert(sizeof(QeCloud) == sizeof(GainLibrary));
  static_assert(!std::is_default_constructible_v<QeCloud>);
  static_assert(!std::is_constructible_v<QeCloud, GainLibrary, keys::KeyConfig>);
  SUCCEED();
}

TEST(Protocol, CountsMatchClosedFormsForAllShapes) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ud(-1, 1);
  for (Eigen::Index n = 1; n <= 6; ++n) {
    for (Eigen::Index m = 1; m <= 6; ++m) {
      const PwaController ctrl = single_region(n, m, rng);
      const Vector x = Vector::NullaryExpr(n, [&] { return ud(rng); });
      const Vector u_ref = ctrl.regions[0].eval(x);
      auto qe = make_backend(BackendKind::kQe, ctrl, BackendConfig{});
      auto he = make_backend(BackendKind::kPaillier, ctrl, small_paillier());
      auto pt = make_backend(BackendKind::kPlaintext, ctrl, BackendConfig{});
      const auto un = static_cast<std::uint64_t>(n), um = static_cast<std::uint64_t>(m);
      for (std::uint64_t k = 0; k < 2; ++k) {
        const CycleResult rq = qe->run_cycle(k, x);
        EXPECT_EQ(rq.metrics.counts, qe_counts_closed_form(un, um)) << n << "x" << m;
        EXPECT_LE((rq.u - u_ref).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_EQ(rq.metrics.payload.sensor_to_cloud, 32 + 64 * (un + um));
        EXPECT_EQ(rq.metrics.payload.cloud_to_actuator, 64 * (um * un + um));

        const CycleResult rh = he->run_cycle(k, x);
        EXPECT_EQ(rh.metrics.counts, paillier_counts_closed_form(un, um)) << n << "x" << m;
        EXPECT_LE((rh.u - u_ref).cwiseAbs().maxCoeff(), 1e-3);
        EXPECT_EQ(rh.metrics.payload.sensor_to_cloud, 32 + 512 * (un + um));
        EXPECT_EQ(rh.metrics.payload.cloud_to_actuator, 512 * um);

        EXPECT_EQ(pt->run_cycle(k, x).metrics.counts, PrimitiveCounts{});
      }
    }
  }
}

TEST(Protocol, BenchmarkPayloadExample) {
  // n = 2, m = 1: 32-bit region index, then 3 + 3 doubles on the two links.
  const PwaController& ctrl = benchmark_controller();
  BackendConfig cfg;
  auto qe = make_backend(BackendKind::kQe, ctrl, cfg);
  Vector x(2);
  x << 1.0, -0.5;
  const CycleResult r = qe->run_cycle(0, x);
  EXPECT_EQ(r.metrics.payload.total(), 416u);
  EXPECT_EQ(r.metrics.counts.enc, 3u);
  EXPECT_EQ(r.metrics.counts.con, 2u);
  EXPECT_EQ(r.metrics.counts.dec, 3u);
  EXPECT_EQ(r.metrics.counts.sums, 2u);
}

TEST(Protocol, QuantizedForwardingIsBitIdentical) {
  // The cloud re-encodes b~ after decoding the sensor's words; the forwarded
  // words must be exactly the received ones.
  const PwaController& ctrl = benchmark_controller();
  BackendConfig cfg;
  cfg.w_b = 4;
  cfg.w = 12;
  auto qe = make_backend(BackendKind::kQeQuantized, ctrl, cfg);
  Vector x(2);
  x << 0.4, -0.3;
  for (std::uint64_t k = 0; k < 10; ++k) qe->run_cycle(k, x);
  const QeWire wire{true, 12};
  const auto& recs = qe->tap().records();
  ASSERT_EQ(recs.size(), 20u);
  for (std::size_t i = 0; i < recs.size(); i += 2) {
    const auto s = decode_sensor_message(recs[i].bytes, 2, 1, wire);
    const auto c = decode_cloud_message(recs[i + 1].bytes, 2, 1, wire);
    EXPECT_EQ(s.b.entries, c.b.entries);
  }
}

TEST(Protocol, WireCodecRoundtrip) {
  MsgSensorToCloud msg;
  msg.sigma = 7;
  msg.x.entries = Vector(3);
  msg.x.entries << 0.7, 1.0, 1.9;
  msg.b.entries = Vector::Constant(1, 1.25);
  std::mt19937_64 rng(1);
  const Encoded plain = encode_message(msg, QeWire{false, 16}, rng);
  EXPECT_EQ(plain.payload_bits(), 32u + 4 * 64);
  const MsgSensorToCloud back = decode_sensor_message(plain.bytes, 3, 1, QeWire{false, 16});
  EXPECT_EQ(back.sigma, 7u);
  EXPECT_EQ(back.x.entries, msg.x.entries);
  EXPECT_EQ(back.b.entries, msg.b.entries);

  const Encoded q = encode_message(msg, QeWire{true, 10}, rng);
  EXPECT_EQ(q.payload_bits(), 32u + 4 * 10);
  EXPECT_EQ(q.padding_bits, 0u);  // 40 bits of words pack into 5 bytes
  const MsgSensorToCloud qb = decode_sensor_message(q.bytes, 3, 1, QeWire{true, 10});
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(qb.x.entries(i), msg.x.entries(i), 0.01);

  auto truncated = plain.bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_sensor_message(truncated, 3, 1, QeWire{false, 16}), WireFormatError);
}

TEST(Protocol, EavesdropperNeverSeesPlaintextState) {
  // Runtime audit of everything on both links: no 8-byte window decodes to a
  // state component. Components within 1e-3 of zero are skipped: arbitrary
  // bytes with a small exponent decode to values that close to 0.
  const PwaController& ctrl = benchmark_controller();
  const Scenario s = double_integrator_benchmark();
  for (BackendKind kind : {BackendKind::kQe, BackendKind::kPaillier}) {
    BackendConfig cfg = small_paillier();
    auto backend = make_backend(kind, ctrl, cfg);
    const Trajectory traj = run_closed_loop(s.sys, ctrl, *backend, s.initial_states[0], 20);
    ASSERT_FALSE(traj.fault.has_value());
    const auto& recs = backend->tap().records();
    ASSERT_EQ(recs.size(), 40u);
    for (const TapRecord& rec : recs) {
      const Vector& x = traj.records[rec.k].x;
      for (std::size_t off = 0; off + 8 <= rec.bytes.size(); ++off) {
        double v;
        std::memcpy(&v, rec.bytes.data() + off, 8);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (std::abs(x(i)) < 1e-3) continue;
          ASSERT_FALSE(std::abs(v - x(i)) <= 1e-6) << backend_name(kind) << " k=" << rec.k;
        }
      }
    }
  }
}

TEST(Protocol, PlaintextBackendLeaksStateAsControl) {
  // Sanity check for the audit above: the same scan does find the state in
  // the plaintext backend's traffic.
  const PwaController& ctrl = benchmark_controller();
  auto plain = make_backend(BackendKind::kPlaintext, ctrl, BackendConfig{});
  Vector x(2);
  x << 1.5, -0.25;
  plain->run_cycle(0, x);
  const auto& bytes = plain->tap().records()[0].bytes;
  double first;
  std::memcpy(&first, bytes.data() + 4, 8);
  EXPECT_EQ(first, 1.5);
}

TEST(Protocol, BackendNames) {
  for (BackendKind k : {BackendKind::kPlaintext, BackendKind::kQe, BackendKind::kQeQuantized,
                        BackendKind::kPaillier}) {
    EXPECT_EQ(parse_backend(backend_name(k)), k);
  }
  EXPECT_THROW(parse_backend("rsa"), ConfigError);
}

TEST(Protocol, PaillierTrafficRoundtrips) {
  const PwaController& ctrl = benchmark_controller();
  auto he = make_backend(BackendKind::kPaillier, ctrl, small_paillier());
  Vector x(2);
  x << -1.0, 0.5;
  const CycleResult r = he->run_cycle(0, x);
  const auto& recs = he->tap().records();
  EXPECT_EQ(r.metrics.wire.sensor_to_cloud, recs[0].bytes.size() * 8);
  EXPECT_EQ(r.metrics.wire.cloud_to_actuator, recs[1].bytes.size() * 8);
  EXPECT_LE(std::abs(r.u(0) - eval_pwa(ctrl, r.sigma, x)(0)), 1e-4);
}
