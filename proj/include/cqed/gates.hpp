#pragma once

// Gate-level characterization: Pauli transfer matrices and superkets,
// decoherence channels, average fidelity, Clifford randomized benchmarking,
// residual-ZZ estimation, and the quantum-volume metric.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "cqed/numerics/rng.hpp"
#include "cqed/sim/device.hpp"

namespace cqed::gates {

struct PTM {
  Eigen::MatrixXd R;
  int n_qubits = 1;
  int dim() const { return 1 << n_qubits; }
};

// Pauli-basis expansion of a density matrix, v_k = Tr(P_k rho)/sqrt(d).
using SuperKet = Eigen::VectorXd;

PTM ptm_identity(int n_qubits = 1);

// R_ij = (1/d) Tr(P_i U P_j U^dag). Throws on non-unitary input (1e-10).
PTM ptm_of_unitary(const Eigen::MatrixXcd& u);

// The single-qubit relaxation and pure-dephasing channels, p = 1 - e^{-t/T}.
// Throws for p outside [0, 1].
PTM ptm_t1(double p);
PTM ptm_tphi(double p);

// Depolarizing channel diag(1, lambda, lambda, lambda).
PTM ptm_depolarizing(double lambda);

PTM ptm_compose(const PTM& r2, const PTM& r1);  // r2 after r1
SuperKet ptm_apply(const PTM& r, const SuperKet& v);

SuperKet superket_of_density(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd density_of_superket(const SuperKet& v);

// F = (Tr(R_target^-1 R) + d) / (d (d + 1)). Throws on singular target.
double average_fidelity(const PTM& target, const PTM& r);

// The 24 single-qubit Cliffords, each given as a decomposition word over
// {I, X90, Y90, Z90} (first gate applied first). Loaded from a JSON table;
// the two shipped tables (XY and XZ generators) enumerate the same group
// elements in the same order.
struct CliffordTable {
  std::vector<std::vector<std::string>> words;
  std::vector<Eigen::Matrix2cd> unitaries;
  std::vector<PTM> ptms;
};

CliffordTable load_clifford_table(const std::string& json_path);

struct RbResult {
  std::vector<int> lengths;
  std::vector<double> survival;  // mean ground-state population per length
  double amplitude = 0.0, offset = 0.0, p = 1.0;  // fit of A p^m + B
  double epsilon_per_clifford = 0.0;  // (1 - p)(d - 1)/d
  bool fit_converged = false;
};

// Clifford RB with a gate-independent noise channel applied after every
// Clifford (including the recovery gate, found as the exact group inverse).
// An optional interleaved channel models interleaved RB.
RbResult rb_simulate(const PTM& noise_per_clifford,
                     const std::vector<int>& sequence_lengths, int n_random,
                     const CliffordTable& table, numerics::RngStream& rng,
                     const PTM* interleaved = nullptr);

struct ZZModel {
  double zeta = 0.0;         // Hz, best available estimate (exact)
  double zeta_approx = 0.0;  // Hz, perturbative expression with J2 = sqrt(2) J1
  double zeta_exact = 0.0;   // Hz, from diagonalization
  double consistency = 0.0;  // zeta_exact / zeta_approx
  double j1 = 0.0;           // Hz
  double theta(double tau) const { return zeta * tau / 4.0; }  // rad
};

// Residual ZZ from the coupled-transmon spectrum (E11 - E01 - E10 gauge).
ZZModel zz_estimate(double f_i, double f_j, double alpha_i, double alpha_j,
                    double j1);

struct ZZEchoResult {
  double zeta = 0.0;  // Hz, signed
  double frequency = 0.0;  // Hz, fitted oscillation frequency |zeta|/2
  bool oscillation_resolved = false;
  std::vector<double> tau;
  std::vector<double> population;  // in-phase echo signal
};

// Echo on the device qubit with the neighbor toggled between arms; the
// signal oscillates at zeta/2 and the sign is resolved from the quadrature
// readout phase. Throws when the grid ends before one oscillation period
// can be resolved.
ZZEchoResult zz_echo_experiment(sim::Device& dev,
                                const std::vector<double>& tau_grid,
                                int shots);

struct QuantumVolume {
  int n_opt = 0;      // circuit width maximizing min(n, d(n))
  double depth = 0.0; // d(n_opt) = 1/(n_opt * eps_eff(n_opt))
  int log2_vq = 0;    // floor of max_n min(n, d(n))
};

QuantumVolume quantum_volume(int n_max,
                             const std::function<double(int)>& eps_eff);

}  // namespace cqed::gates
