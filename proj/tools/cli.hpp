#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qempc::cli {

// Entry point of the qempc tool. Returns 0 on success, 1 on a runtime fault
// and 2 on a configuration error. `args` includes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qempc::cli
