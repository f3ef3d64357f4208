#pragma once

#include <Eigen/Dense>

namespace qempc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace qempc
