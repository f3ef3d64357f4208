#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qempc/csv.hpp"
#include "qempc/errors.hpp"
#include "qempc/wire.hpp"

using namespace qempc;

TEST(Wire, ScalarsAreLittleEndian) {
  wire::ByteWriter w;
  w.u32(0x01020304u);
  w.f64(1.0);
  const auto bytes = w.take();
  ASSERT_EQ(bytes.size(), 12u);
  EXPECT_EQ(bytes[0], 0x04);
  EXPECT_EQ(bytes[3], 0x01);
  EXPECT_EQ(bytes[11], 0x3f);  // 1.0 = 0x3ff0000000000000
  EXPECT_EQ(bytes[10], 0xf0);
  wire::ByteReader r(bytes);
  EXPECT_EQ(r.u32(), 0x01020304u);
  EXPECT_EQ(r.f64(), 1.0);
  EXPECT_NO_THROW(r.expect_end());
}

TEST(Wire, BigIntegersAreMinimalBigEndian) {
  wire::ByteWriter w;
  w.big(mpz_class(0x0102));
  w.big(mpz_class(0));
  const mpz_class huge = (mpz_class(1) << 1000) + 12345;
  w.big(huge);
  const auto bytes = w.take();
  EXPECT_EQ(bytes[0], 2);  // length prefix
  EXPECT_EQ(bytes[4], 0x01);
  EXPECT_EQ(bytes[5], 0x02);
  wire::ByteReader r(bytes);
  EXPECT_EQ(r.big(), 0x0102);
  EXPECT_EQ(r.big(), 0);
  EXPECT_EQ(r.big(), huge);
  r.expect_end();
}

TEST(Wire, BitPackingCountsPadding) {
  wire::ByteWriter w;
  w.bits(0b101, 3);
  w.bits(0b11110000, 8);
  w.u32(7);  // forces the 11-bit run to be padded to 16
  EXPECT_EQ(w.padding_bits(), 5u);
  const auto bytes = w.take();
  ASSERT_EQ(bytes.size(), 6u);
  EXPECT_EQ(bytes[0], 0b10111110);
  EXPECT_EQ(bytes[1], 0b00000000);
  wire::ByteReader r(bytes);
  EXPECT_EQ(r.bits(3), 0b101u);
  EXPECT_EQ(r.bits(8), 0b11110000u);
  r.align();
  EXPECT_EQ(r.u32(), 7u);
}

TEST(Wire, MalformedInputThrows) {
  wire::ByteWriter w;
  w.u32(1);
  auto bytes = w.take();
  bytes.pop_back();
  wire::ByteReader r(bytes);
  EXPECT_THROW(r.u32(), WireFormatError);

  wire::ByteWriter w2;
  w2.u32(1);
  w2.u32(2);
  const auto two = w2.take();
  wire::ByteReader r2(two);
  r2.u32();
  EXPECT_THROW(r2.expect_end(), WireFormatError);

  std::vector<std::uint8_t> bad_big{200, 0, 0, 0, 1};  // claims 200 bytes
  wire::ByteReader r3(bad_big);
  EXPECT_THROW(r3.big(), WireFormatError);
}

TEST(Csv, FormatRoundtripsDoubles) {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 12345678.9, 0.0}) {
    EXPECT_EQ(std::stod(csv::format(v)), v);
  }
}

TEST(Csv, QuotingAndRows) {
  EXPECT_EQ(csv::quote("plain"), "plain");
  EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  std::ostringstream out;
  csv::Writer w(out);
  w.field("x").field(std::uint64_t{3}).field(-2).field(0.5);
  w.end_row();
  w.field("next,row");
  w.end_row();
  EXPECT_EQ(out.str(), "x,3,-2,0.5\n\"next,row\"\n");
}
