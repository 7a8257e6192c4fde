#pragma once

// Fixed-step RK4 integrator for the Lindblad master equation
//   drho/dt = -i[H(t), rho] + sum_k ( L_k rho L_k^dag - {L_k^dag L_k, rho}/2 )
// with H in angular units (rad/s). The step is halved automatically until
// the final state stops moving, so results are deterministic and
// reproducible. Each step symmetrizes rho, keeping it Hermitian exactly.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace cqed::numerics {

using Generator = std::function<Eigen::MatrixXcd(double t)>;

struct LindbladOptions {
  double initial_dt = 0.0;       // 0: derived from the grid spacing
  double convergence_tol = 1e-8; // fidelity change between dt and dt/2
  double trace_tol = 1e-6;
  int max_halvings = 14;
};

// Returns rho(t) at every point of t_grid (t_grid[0] maps to rho0).
std::vector<Eigen::MatrixXcd> integrate_lindblad(
    const Generator& hamiltonian, const std::vector<Eigen::MatrixXcd>& collapse_ops,
    const Eigen::MatrixXcd& rho0, const std::vector<double>& t_grid,
    const LindbladOptions& opts = {});

// Uhlmann fidelity between density matrices (used by the convergence test).
double state_fidelity(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace cqed::numerics
