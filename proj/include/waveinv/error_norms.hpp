#pragma once

#include <Eigen/Dense>

namespace waveinv {

/// Element-wise relative Manhattan error ||1 - diag(reference)^-1 x||_1.
/// Throws std::invalid_argument for a zero reference component.
double relative_1(const Eigen::VectorXd& reference, const Eigen::VectorXd& x);

/// Relative Euclidean error ||reference - y||_2 / ||reference||_2.
double relative_2(const Eigen::VectorXd& reference, const Eigen::VectorXd& y);

}  // namespace waveinv
