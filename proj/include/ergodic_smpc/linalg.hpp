#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace ergodic_smpc {

struct PowerIterationOptions {
  double tolerance = 1e-10;  // relative change of the sigma^2 estimate
  std::size_t max_iterations = 10000;
};

/// Spectral norm (largest singular value) by power iteration on M^T M.
double operator_norm(const Eigen::MatrixXd& m, const PowerIterationOptions& options = {});

/// lambda_max / lambda_min of a symmetric matrix; +inf when lambda_min <= 0.
double symmetric_condition_number(const Eigen::MatrixXd& m);

}  // namespace ergodic_smpc
