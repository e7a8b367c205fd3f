#pragma once

#include <Eigen/Dense>

namespace hwu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace hwu
