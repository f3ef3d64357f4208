#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace qempc::csv {

// Doubles as %.17g, strings quoted only when they contain , " CR or LF.
std::string format(double v);
std::string quote(std::string_view field);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& field(std::string_view v);
  Writer& field(double v);
  Writer& field(std::uint64_t v);
  Writer& field(std::int64_t v);
  Writer& field(int v) { return field(static_cast<std::int64_t>(v)); }
  Writer& field(unsigned v) { return field(static_cast<std::uint64_t>(v)); }
  Writer& field(const char* v) { return field(std::string_view(v)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace qempc::csv
