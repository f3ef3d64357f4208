#include "qempc/controller_io.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace qempc {

std::string controller_to_json(const PwaController& ctrl) {
  using detail::write_matrix;
  using detail::write_vector;
  std::string out;
  out += "{\n  \"format\": \"qempc-pwa-controller\",\n  \"version\": 1,\n";
  out += "  \"n\": " + std::to_string(ctrl.n) + ",\n";
  out += "  \"m\": " + std::to_string(ctrl.m) + ",\n";
  out += "  \"regions\": [";
  for (std::size_t s = 0; s < ctrl.regions.size(); ++s) {
    const CriticalRegion& r = ctrl.regions[s];
    out += s ? ",\n    {" : "\n    {";
    out += "\"A_ineq\": ";
    write_matrix(out, r.poly.a);
    out += ", \"b_ineq\": ";
    write_vector(out, r.poly.b);
    out += ", \"K\": ";
    write_matrix(out, r.k);
    out += ", \"b\": ";
    write_vector(out, r.b);
    out += ", \"active_set\": [";
    for (std::size_t i = 0; i < r.active_set.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(r.active_set[i]);
    }
    out += "]}";
  }
  out += "\n  ]\n}\n";
  return out;
}

PwaController controller_from_json(const std::string& text,
                                   const std::string& source) {
  using detail::require;
  const auto doc = detail::parse_json(text, source);
  PwaController ctrl;
  try {
    ctrl.n = require(doc, "n").get<Eigen::Index>();
    ctrl.m = require(doc, "m").get<Eigen::Index>();
    if (ctrl.n <= 0 || ctrl.m <= 0) throw ConfigError("dimensions must be positive");
    const auto& regions = require(doc, "regions");
    if (!regions.is_array() || regions.empty()) {
      throw ConfigError("'regions' must be a nonempty array");
    }
    for (const auto& jr : regions) {
      CriticalRegion r;
      Matrix a = detail::read_matrix(require(jr, "A_ineq"), "A_ineq", ctrl.n);
      Vector b = detail::read_vector(require(jr, "b_ineq"), "b_ineq");
      if (a.rows() > 0 && a.cols() != ctrl.n) throw ConfigError("A_ineq must have n columns");
      r.poly = Polyhedron(std::move(a), std::move(b));
      r.k = detail::read_matrix(require(jr, "K"), "K", ctrl.n);
      r.b = detail::read_vector(require(jr, "b"), "b");
      if (r.k.rows() != ctrl.m || r.k.cols() != ctrl.n || r.b.size() != ctrl.m) {
        throw ConfigError("region gain dimensions disagree with n, m");
      }
      for (const auto& idx : require(jr, "active_set")) {
        r.active_set.push_back(idx.get<std::size_t>());
      }
      ctrl.regions.push_back(std::move(r));
    }
  } catch (const detail::json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const InvalidProblem& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return ctrl;
}

void save_controller(const PwaController& ctrl, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << controller_to_json(ctrl);
}

PwaController load_controller(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return controller_from_json(ss.str(), path.string());
}

}  // namespace qempc
