#pragma once

#include <Eigen/Dense>
#include <functional>

namespace squeezesim::spectral::detail {

// Weighted residuals r_i = (y_i - model_i) / sigma_i and Jacobian
// J_ij = d model_i / d p_j / sigma_i.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;
using FeasibleFn = std::function<bool(const Eigen::VectorXd& p)>;

struct LevMarOptions {
  int max_iterations = 200;
  double rel_tol = 1e-12;  // relative chi^2 decrease or step size declared converged
};

struct LevMarResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd jtj_inverse;  // unscaled covariance (J^T J)^-1
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

LevMarResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0,
                                 const FeasibleFn& feasible, const LevMarOptions& options);

}  // namespace squeezesim::spectral::detail
