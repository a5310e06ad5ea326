#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wdn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

inline constexpr double kGravity = 9.81;  // m/s^2

}  // namespace wdn
