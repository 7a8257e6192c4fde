#include "cqed/numerics/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace cqed::numerics {

namespace {

using Eigen::MatrixXcd;
using cplx = std::complex<double>;

MatrixXcd rhs(const Generator& ham, const std::vector<MatrixXcd>& cs,
              const std::vector<MatrixXcd>& cdc, double t, const MatrixXcd& rho) {
  const MatrixXcd h = ham(t);
  MatrixXcd d = cplx(0.0, -1.0) * (h * rho - rho * h);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    d += cs[k] * rho * cs[k].adjoint() - 0.5 * (cdc[k] * rho + rho * cdc[k]);
  }
  return d;
}

MatrixXcd rk4_step(const Generator& ham, const std::vector<MatrixXcd>& cs,
                   const std::vector<MatrixXcd>& cdc, double t, double dt,
                   const MatrixXcd& rho) {
  const MatrixXcd k1 = rhs(ham, cs, cdc, t, rho);
  const MatrixXcd k2 = rhs(ham, cs, cdc, t + 0.5 * dt, rho + 0.5 * dt * k1);
  const MatrixXcd k3 = rhs(ham, cs, cdc, t + 0.5 * dt, rho + 0.5 * dt * k2);
  const MatrixXcd k4 = rhs(ham, cs, cdc, t + dt, rho + dt * k3);
  MatrixXcd next = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return 0.5 * (next + next.adjoint().eval());  // Hermitian by construction
}

// Advance from t0 to t1 with fixed substeps of size <= dt.
MatrixXcd advance(const Generator& ham, const std::vector<MatrixXcd>& cs,
                  const std::vector<MatrixXcd>& cdc, MatrixXcd rho, double t0,
                  double t1, double dt) {
  const double span = t1 - t0;
  if (span <= 0.0) return rho;
  const int n = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-12)));
  const double h = span / n;
  for (int i = 0; i < n; ++i) {
    rho = rk4_step(ham, cs, cdc, t0 + i * h, h, rho);
  }
  return rho;
}

std::vector<MatrixXcd> run(const Generator& ham, const std::vector<MatrixXcd>& cs,
                           const std::vector<MatrixXcd>& cdc, const MatrixXcd& rho0,
                           const std::vector<double>& grid, double dt) {
  std::vector<MatrixXcd> out;
  out.reserve(grid.size());
  out.push_back(0.5 * (rho0 + rho0.adjoint().eval()));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    out.push_back(advance(ham, cs, cdc, out.back(), grid[i - 1], grid[i], dt));
  }
  return out;
}

}  // namespace

double state_fidelity(const MatrixXcd& a, const MatrixXcd& b) {
  // F = (Tr sqrt(sqrt(a) b sqrt(a)))^2, computed through eigendecompositions.
  Eigen::SelfAdjointEigenSolver<MatrixXcd> ea(0.5 * (a + a.adjoint().eval()));
  Eigen::VectorXd va = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixXcd sqrt_a =
      ea.eigenvectors() * va.asDiagonal() * ea.eigenvectors().adjoint();
  MatrixXcd m = sqrt_a * 0.5 * (b + b.adjoint().eval()) * sqrt_a;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> em(0.5 * (m + m.adjoint().eval()));
  double tr = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

std::vector<Eigen::MatrixXcd> integrate_lindblad(
    const Generator& hamiltonian, const std::vector<Eigen::MatrixXcd>& collapse_ops,
    const Eigen::MatrixXcd& rho0, const std::vector<double>& t_grid,
    const LindbladOptions& opts) {
  if (t_grid.empty()) throw std::invalid_argument("empty time grid");
  if (rho0.rows() != rho0.cols()) throw std::invalid_argument("rho0 not square");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");
  }

  std::vector<MatrixXcd> cdc;
  cdc.reserve(collapse_ops.size());
  for (const auto& c : collapse_ops) cdc.push_back(c.adjoint() * c);

  const double total = t_grid.back() - t_grid.front();
  double dt = opts.initial_dt > 0.0
                  ? opts.initial_dt
                  : total / std::max<std::size_t>(t_grid.size() - 1, 1) / 4.0;
  if (t_grid.size() == 1) {
    std::vector<MatrixXcd> single{0.5 * (rho0 + rho0.adjoint().eval())};
    return single;
  }

  std::vector<MatrixXcd> result = run(hamiltonian, collapse_ops, cdc, rho0, t_grid, dt);
  for (int pass = 0; pass < opts.max_halvings; ++pass) {
    dt *= 0.5;
    std::vector<MatrixXcd> finer =
        run(hamiltonian, collapse_ops, cdc, rho0, t_grid, dt);
    const double f = state_fidelity(result.back(), finer.back());
    result = std::move(finer);
    if (std::abs(1.0 - f) < opts.convergence_tol) break;
  }

  for (auto& rho : result) {
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > opts.trace_tol)
      throw std::runtime_error("lindblad integration lost trace normalization");
  }
  return result;
}

}  // namespace cqed::numerics
