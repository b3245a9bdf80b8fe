#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace netdemix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using NodeId = std::size_t;

}  // namespace netdemix
