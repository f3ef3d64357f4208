#include "qempc/wire.hpp"

#include <bit>
#include <cstring>

#include "qempc/errors.hpp"

namespace qempc::wire {

void ByteWriter::u32(std::uint32_t v) {
  align();
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) {
  align();
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

void ByteWriter::big(const mpz_class& v) {
  if (v < 0) throw WireFormatError("cannot encode a negative integer");
  align();
  std::size_t count = 0;
  std::vector<std::uint8_t> buf((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8 + 1);
  if (v != 0) mpz_export(buf.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  u32(static_cast<std::uint32_t>(count));
  out_.insert(out_.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(count));
}

void ByteWriter::bits(std::uint64_t v, unsigned width) {
  for (unsigned i = width; i-- > 0;) {
    if (bit_fill_ == 0) out_.push_back(0);
    const std::uint8_t bit = (v >> i) & 1U;
    out_.back() |= static_cast<std::uint8_t>(bit << (7 - bit_fill_));
    bit_fill_ = (bit_fill_ + 1) % 8;
  }
}

void ByteWriter::align() {
  if (bit_fill_ != 0) {
    padding_ += 8 - bit_fill_;
    bit_fill_ = 0;
  }
}

std::vector<std::uint8_t> ByteWriter::take() {
  align();
  return std::move(out_);
}

void ByteReader::need(std::size_t count) const {
  if (pos_ + count > in_.size()) throw WireFormatError("message truncated");
}

std::uint32_t ByteReader::u32() {
  align();
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

double ByteReader::f64() {
  align();
  need(8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return std::bit_cast<double>(u);
}

mpz_class ByteReader::big() {
  const std::uint32_t count = u32();
  need(count);
  mpz_class v;
  if (count > 0) mpz_import(v.get_mpz_t(), count, 1, 1, 1, 0, in_.data() + pos_);
  pos_ += count;
  return v;
}

std::uint64_t ByteReader::bits(unsigned width) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) {
    if (bit_pos_ == 0) {
      need(1);
      ++pos_;
    }
    const std::uint8_t bit = (in_[pos_ - 1] >> (7 - bit_pos_)) & 1U;
    v = (v << 1) | bit;
    bit_pos_ = (bit_pos_ + 1) % 8;
  }
  return v;
}

void ByteReader::expect_end() const {
  if (pos_ != in_.size()) throw WireFormatError("trailing bytes after message");
}

}  // namespace qempc::wire
