#pragma once

// Internal helpers shared by the JSON readers and writers.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "qempc/errors.hpp"
#include "qempc/linalg.hpp"

namespace qempc::detail {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_vector(std::string& out, const Vector& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v(i));
  }
  out += ']';
}

// Row-major nested arrays.
inline void write_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += ", ";
    write_vector(out, m.row(r).transpose());
  }
  out += ']';
}

inline const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

inline Vector read_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(std::string(what) + ": expected numbers");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

// `cols` is used when the array has no rows.
inline Matrix read_matrix(const json& j, const char* what, Eigen::Index cols = 0) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected array");
  if (j.empty()) return Matrix(0, cols);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Vector first = read_vector(j[0], what);
  Matrix m(rows, first.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = read_vector(j[static_cast<std::size_t>(r)], what);
    if (row.size() != m.cols()) {
      throw ConfigError(std::string(what) + ": ragged matrix");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
}

}  // namespace qempc::detail
