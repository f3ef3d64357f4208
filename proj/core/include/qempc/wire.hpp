#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

// Little-endian byte codec with an MSB-first bit packer for quantized words.
namespace qempc::wire {

class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void f64(double v);
  // Minimal big-endian bytes of a nonnegative integer, prefixed by a u32
  // length.
  void big(const mpz_class& v);

  // Appends the low `width` bits of v, most significant first. A following
  // byte-level write first pads the partial byte with zeros.
  void bits(std::uint64_t v, unsigned width);
  void align();

  std::size_t padding_bits() const { return padding_; }
  std::vector<std::uint8_t> take();

 private:
  std::vector<std::uint8_t> out_;
  unsigned bit_fill_ = 0;  // bits used in the last byte, 0 when aligned
  std::size_t padding_ = 0;
};

// Throws WireFormatError on truncated or trailing input.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32();
  double f64();
  mpz_class big();
  std::uint64_t bits(unsigned width);
  void align() { bit_pos_ = 0; }
  void expect_end() const;

 private:
  void need(std::size_t count) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  unsigned bit_pos_ = 0;  // bits consumed from in_[pos_ - 1]
};

}  // namespace qempc::wire
