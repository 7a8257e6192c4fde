#include "cqed/numerics/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace cqed::numerics {
namespace {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd p, const FitOptions& opts) {
  if (opts.lower) p = p.cwiseMax(*opts.lower);
  if (opts.upper) p = p.cwiseMin(*opts.upper);
  return p;
}

// Central finite differences, step scaled to parameter magnitude.
Eigen::MatrixXd jacobian(const ResidualFn& r, const Eigen::VectorXd& p,
                         Eigen::Index m, const FitOptions& opts) {
  Eigen::MatrixXd J(m, p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double scale = std::max(std::abs(p[j]), 1.0);
    const double h = opts.fd_step * scale;
    Eigen::VectorXd pp = p, pm = p;
    pp[j] += h;
    pm[j] -= h;
    J.col(j) = (r(clamp_to_bounds(pp, opts)) - r(clamp_to_bounds(pm, opts))) / (2.0 * h);
  }
  return J;
}

FitResult solve(const ResidualFn& residual, const Eigen::VectorXd& p0,
                Eigen::Index n_data, const FitOptions& opts) {
  if (!p0.allFinite()) throw std::invalid_argument("least_squares_fit: non-finite p0");
  if (n_data < p0.size())
    throw std::invalid_argument("least_squares_fit: fewer data points than parameters");

  FitResult out;
  Eigen::VectorXd p = clamp_to_bounds(p0, opts);
  Eigen::VectorXd r = residual(p);
  if (!r.allFinite()) throw std::invalid_argument("least_squares_fit: non-finite residual at p0");
  double cost = r.squaredNorm();

  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd J;

  for (; iter < opts.max_iterations; ++iter) {
    J = jacobian(residual, p, r.size(), opts);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;

    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol * std::max(1.0, cost)) {
      converged = true;
      break;
    }

    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd p_new = clamp_to_bounds(p + step, opts);
      const Eigen::VectorXd r_new = residual(p_new);
      const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (cost_new < cost) {
        // Per-parameter relative step: a mixed-scale parameter vector (GHz
        // next to ns) must not let the largest component mask the others.
        double rel_step = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j)
          rel_step = std::max(rel_step, std::abs(p_new[j] - p[j]) /
                                            std::max(1.0, std::abs(p[j])));
        p = p_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel_step < opts.step_tol) converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!stepped || converged) {
      // No downhill step found at any damping: local minimum (or stuck).
      if (!stepped) converged = true;
      break;
    }
  }

  out.params = p;
  out.residual_norm = std::sqrt(cost);
  out.converged = converged;
  out.n_iterations = iter + 1;

  // Covariance = s^2 (J^T J)^-1 with s^2 the residual variance.
  J = jacobian(residual, p, r.size(), opts);
  const Eigen::Index dof = std::max<Eigen::Index>(r.size() - p.size(), 1);
  const double s2 = cost / static_cast<double>(dof);
  Eigen::MatrixXd JtJ = J.transpose() * J;
  JtJ.diagonal() += Eigen::VectorXd::Constant(p.size(), 1e-300);
  out.covariance = s2 * JtJ.inverse();
  // Symmetrize (inverse of a symmetric matrix can pick up rounding skew).
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

}  // namespace

FitResult least_squares_fit(const RealModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& p0,
                            const FitOptions& opts) {
  if (x.size() != y.size())
    throw std::invalid_argument("least_squares_fit: x/y length mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("least_squares_fit: non-finite data");
  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return model(x, p) - y;
  };
  return solve(residual, p0, x.size(), opts);
}

FitResult least_squares_fit(const ComplexModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXcd& y, const Eigen::VectorXd& p0,
                            const FitOptions& opts) {
  if (x.size() != y.size())
    throw std::invalid_argument("least_squares_fit: x/y length mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("least_squares_fit: non-finite data");
  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const Eigen::VectorXcd d = model(x, p) - y;
    Eigen::VectorXd r(2 * d.size());
    r.head(d.size()) = d.real();
    r.tail(d.size()) = d.imag();
    return r;
  };
  return solve(residual, p0, 2 * x.size(), opts);
}

}  // namespace cqed::numerics
