#pragma once

#include <Eigen/Dense>

namespace daestab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace daestab
