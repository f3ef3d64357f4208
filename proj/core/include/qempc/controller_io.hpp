#pragma once

#include <filesystem>
#include <string>

#include "qempc/mpqp.hpp"

namespace qempc {

// JSON document with the dimensions and, per region, A_ineq, b_ineq, K, b and
// active_set. Matrices are row-major nested arrays; every number is written
// with 17 significant digits so a load reproduces the doubles bit for bit.
std::string controller_to_json(const PwaController& ctrl);

// Throws ConfigError on malformed JSON (message carries the byte offset) or
// on schema violations.
PwaController controller_from_json(const std::string& text,
                                   const std::string& source = "controller");

void save_controller(const PwaController& ctrl, const std::filesystem::path& path);
PwaController load_controller(const std::filesystem::path& path);

}  // namespace qempc
