#include "qempc/csv.hpp"

#include <cstdio>

namespace qempc::csv {

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Writer& Writer::field(std::string_view v) {
  if (!first_) out_ << ',';
  out_ << quote(v);
  first_ = false;
  return *this;
}

Writer& Writer::field(double v) { return field(std::string_view(format(v))); }

Writer& Writer::field(std::uint64_t v) { return field(std::string_view(std::to_string(v))); }

Writer& Writer::field(std::int64_t v) { return field(std::string_view(std::to_string(v))); }

void Writer::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace qempc::csv
