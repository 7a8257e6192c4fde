#pragma once

// Nonlinear least squares: damped Gauss-Newton (Levenberg-Marquardt style
// damping schedule) with central finite-difference Jacobians. Complex data
// is fitted by stacking real and imaginary residuals.

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace cqed::numerics {

struct FitResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  bool converged = false;
  int n_iterations = 0;

  // 1-sigma uncertainty of parameter i, from the covariance diagonal.
  double stderr_of(int i) const {
    const double v = covariance(i, i);
    return v > 0.0 ? std::sqrt(v) : 0.0;
  }
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-12;
  double step_tol = 1e-14;
  double fd_step = 1e-6;  // relative central-difference step
  std::optional<Eigen::VectorXd> lower;
  std::optional<Eigen::VectorXd> upper;
};

// Model evaluated on the whole grid at once: y_hat(x, p).
using RealModel =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& p)>;
using ComplexModel =
    std::function<Eigen::VectorXcd(const Eigen::VectorXd& x, const Eigen::VectorXd& p)>;

FitResult least_squares_fit(const RealModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& p0,
                            const FitOptions& opts = {});

FitResult least_squares_fit(const ComplexModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXcd& y, const Eigen::VectorXd& p0,
                            const FitOptions& opts = {});

}  // namespace cqed::numerics
