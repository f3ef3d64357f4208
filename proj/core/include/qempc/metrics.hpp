#pragma once

#include <cstdint>

namespace qempc {

// Primitive invocations in one control cycle.
struct PrimitiveCounts {
  std::uint64_t enc = 0;   // f_Enc
  std::uint64_t con = 0;   // f_Con
  std::uint64_t dec = 0;   // f_Dec
  std::uint64_t sums = 0;  // actuator accumulations
  std::uint64_t he_enc = 0;
  std::uint64_t he_dec = 0;
  std::uint64_t he_add = 0;
  std::uint64_t he_mul = 0;

  PrimitiveCounts& operator+=(const PrimitiveCounts& o);
  bool operator==(const PrimitiveCounts&) const = default;
};

// Closed forms for one cycle of u = K x + b with n states and m inputs.
PrimitiveCounts qe_counts_closed_form(std::uint64_t n, std::uint64_t m);
PrimitiveCounts paillier_counts_closed_form(std::uint64_t n, std::uint64_t m);

struct LinkBits {
  std::uint64_t sensor_to_cloud = 0;
  std::uint64_t cloud_to_actuator = 0;

  std::uint64_t total() const { return sensor_to_cloud + cloud_to_actuator; }
};

struct PartyCost {
  double sensor = 0.0;
  double controller = 0.0;
  double actuator = 0.0;
};

// Worst-case per-cycle bit-operation counts in abstract units.
struct CostModel {
  double he_total = 0.0;  // (n+2m) L^3 + mn (b_K+1) L^2
  double qe_total = 0.0;  // (mn+n+m) p^3
  PartyCost he_party;
  PartyCost qe_party;
};

CostModel predict_cost(std::uint64_t n, std::uint64_t m, std::uint64_t modulus_bits,
                       std::uint64_t precision_bits, std::uint64_t gain_bits);

struct AccuracyAlignment {
  int delta = 0;  // smallest delta with rho^-delta <= eps
  int w = 0;      // smallest w with 2^-w <= eps
  int p_min = 0;  // = w
};

// Throws InvalidProblem unless 0 < eps < 1 and rho >= 2.
AccuracyAlignment align_accuracy(double eps_q, unsigned rho);

struct PartyTimes {
  double sensor = 0.0;  // seconds
  double cloud = 0.0;
  double actuator = 0.0;

  double total() const { return sensor + cloud + actuator; }
};

struct CycleMetrics {
  PrimitiveCounts counts;
  // Payload per link. QE and plaintext links are measured on the encoded
  // bytes; Paillier ciphertexts are accounted at 2L bits each.
  LinkBits payload;
  // Raw encoded message sizes, including framing.
  LinkBits wire;
  CostModel model;
  PartyTimes times;
  // Ciphertext scalars clamped into the quantizer range (quantized QE only).
  std::uint64_t saturations = 0;
};

}  // namespace qempc
