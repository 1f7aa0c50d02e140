#include "levmar.hpp"

#include <cmath>

#include "squeezesim/errors.hpp"

namespace squeezesim::spectral::detail {

LevMarResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0,
                                 const FeasibleFn& feasible, const LevMarOptions& options) {
  const Eigen::Index np = p0.size();
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(p0, r, jac);
  if (!r.allFinite() || !jac.allFinite()) throw NumericalError("non-finite residuals at the initial guess");
  if (r.size() < np) throw ValidationError("fewer data points than parameters");

  LevMarResult res;
  res.params = std::move(p0);
  res.chi2 = r.squaredNorm();
  double lambda = 1e-3;

  Eigen::VectorXd r_try;
  Eigen::MatrixXd jac_try;
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      // Marquardt scaling; the small additive term keeps flat directions solvable.
      for (Eigen::Index i = 0; i < np; ++i) a(i, i) += lambda * (jtj(i, i) + 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(jtr);
      const Eigen::VectorXd trial = res.params + step;
      if (!step.allFinite() || !feasible(trial)) {
        lambda *= 10.0;
        continue;
      }
      residuals(trial, r_try, jac_try);
      const double chi2 = r_try.squaredNorm();
      if (std::isfinite(chi2) && chi2 <= res.chi2) {
        const double drop = res.chi2 - chi2;
        const double step_rel = step.cwiseAbs().cwiseQuotient(trial.cwiseAbs().array().max(1e-300).matrix()).maxCoeff();
        res.params = trial;
        res.chi2 = chi2;
        r.swap(r_try);
        jac.swap(jac_try);
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (drop <= options.rel_tol * std::max(chi2, 1e-300) || step_rel <= options.rel_tol) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: the current point is a minimum to working precision.
    if (!improved) res.converged = true;
    if (res.converged) break;
  }

  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) throw NumericalError("singular normal matrix at the solution");
  res.jtj_inverse = lu.inverse();
  return res;
}

}  // namespace squeezesim::spectral::detail
