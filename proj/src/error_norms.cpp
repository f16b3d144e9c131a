#include "waveinv/error_norms.hpp"

#include <cmath>
#include <stdexcept>

namespace waveinv {

double relative_1(const Eigen::VectorXd& reference, const Eigen::VectorXd& x) {
  if (reference.size() != x.size()) throw std::invalid_argument("relative_1: size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (reference[i] == 0.0) throw std::invalid_argument("relative_1: zero reference component");
    sum += std::abs(1.0 - x[i] / reference[i]);
  }
  return sum;
}

double relative_2(const Eigen::VectorXd& reference, const Eigen::VectorXd& y) {
  if (reference.size() != y.size()) throw std::invalid_argument("relative_2: size mismatch");
  const double denom = reference.norm();
  if (denom == 0.0) throw std::invalid_argument("relative_2: zero reference");
  return (reference - y).norm() / denom;
}

}  // namespace waveinv
