#pragma once

// Bosonic-mode characterization on a truncated Fock space dispersively
// coupled to a two-level ancilla: number splitting, Ramsey revival, cavity
// T1/T2 protocols, parity mapping, and Wigner tomography.
//
// Conventions:
//  - The cavity lives in an N-dimensional Fock space (default N = 32).
//  - Joint states order the ancilla first: index a*N + n for ancilla level
//    a in {0 = g, 1 = e} and Fock level n.
//  - chi, kerr, and linewidths are in Hz; kappa_cav is a rate in 1/s.

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "cqed/numerics/rng.hpp"

namespace cqed::cavity {

using cplx = std::complex<double>;

struct CavityState {
  int N = 32;               // Fock truncation
  Eigen::MatrixXcd rho;     // N x N (cavity alone) or 2N x 2N (ancilla x cavity)
  double chi = 0.0;         // dispersive shift, Hz
  double kerr = 0.0;        // cavity self-Kerr, Hz (optional, default off)
  double kappa_cav = 0.0;   // photon loss rate, 1/s
  bool has_ancilla = false;

  // Population of the cavity Fock level n (ancilla traced out if present).
  double fock_population(int n) const;
};

// --- Operators -------------------------------------------------------------

Eigen::MatrixXcd annihilation(int N);
Eigen::MatrixXcd number_operator(int N);
Eigen::MatrixXcd parity_operator(int N);  // diag((-1)^n)

// D(alpha) = exp(alpha a^dag - alpha^* a). Throws if |alpha|^2 >= N/4
// (truncation guard).
Eigen::MatrixXcd displacement(cplx alpha, int N);

// Idealized photon-number selective pi rotation: sigma_x on the ancilla
// conditioned on the cavity holding exactly n photons, identity elsewhere.
// Returns a 2N x 2N joint unitary. Throws if n is out of range.
Eigen::MatrixXcd selective_pi(int n, int N);

// --- State constructors ------------------------------------------------------

Eigen::VectorXcd coherent_vector(cplx beta, int N);
CavityState coherent_state(cplx beta, int N = 32);
CavityState fock_state(int n, int N = 32);

// Tensor the ancilla (in |g>) onto a cavity-only state.
CavityState attach_ancilla(const CavityState& s);

// Throws if the top two Fock levels hold more than 1e-6 population.
void check_truncation(const CavityState& s);

// --- Experiments -------------------------------------------------------------

struct NumberSplittingResult {
  Eigen::VectorXd freq;      // absolute probe frequency, Hz
  Eigen::VectorXd response;  // spectroscopy signal (arbitrary units, max 1)
  std::vector<double> peak_freqs;
  double chi_estimate = 0.0;  // NaN when fewer than two peaks are resolved
};

// Ancilla spectrum after displacing the cavity to |beta>: Lorentzian peaks at
// f_qubit - n*chi weighted by Poisson(n; |beta|^2). Throws when the peaks are
// not resolved (chi <= 5 * linewidth).
NumberSplittingResult number_splitting_spectrum(cplx beta, double f_qubit,
                                                double chi, double linewidth,
                                                double f_span, int n_points);

struct RevivalResult {
  Eigen::VectorXd t;
  Eigen::VectorXd p_e;
  double revival_time = 0.0;  // estimated first revival, 2*pi/chi
  double chi_estimate = 0.0;  // NaN when no revival lies inside the grid
};

// Ancilla Ramsey with a coherent state in the cavity:
//   P_e(t) = 1/2 { 1 + exp(-2|beta|^2 sin^2(chi t / 2)) cos(|beta|^2 sin(chi t)) }
// with chi in Hz entering as the angular rate 2*pi*chi.
RevivalResult ramsey_revival(cplx beta, double chi, const Eigen::VectorXd& t);

struct DecayFitResult {
  Eigen::VectorXd t;
  Eigen::VectorXd p;          // measured probability at each delay
  double fitted_time = 0.0;   // T1 or T2, seconds
  bool converged = false;
};

// Cavity T1: displace to beta0 (|beta0|^2 >= 4 required), let the amplitude
// decay as beta0 exp(-kappa t / 2), and read the vacuum probability with a
// selective pi pulse on n = 0, so P_vac(t) = exp(-|beta0|^2 exp(-kappa t)).
// Throws if the grid is shorter than 2/kappa.
DecayFitResult cavity_t1_experiment(double kappa_cav, cplx beta0,
                                    const Eigen::VectorXd& t, int N = 32);

// Cavity T2: prepare (|0> + |1>)/sqrt(2), wait, and invert the preparation so
// that a preserved phase interferes back into |0>. The returned P0(t) equals
// the overlap with the prepared superposition, evolved under photon loss
// kappa_cav and (optionally) pure dephasing gamma_phi, giving
// P0 = 1/2 (1 + exp(-t/T2)) with 1/T2 = kappa/2 + gamma_phi.
DecayFitResult cavity_t2_experiment(double kappa_cav, double gamma_phi,
                                    const Eigen::VectorXd& t, int N = 16);

struct ParityResult {
  int outcome = 0;              // +1 even, -1 odd
  double p_even = 0.0;
  double expectation = 0.0;     // p_even - p_odd = Tr(rho P)
  Eigen::MatrixXcd post_cavity; // cavity state conditioned on the outcome
};

// Ramsey-style parity mapping: Y_pi/2 -- C_Phi(pi) -- Y_pi/2 on the ancilla,
// then an ancilla measurement (e <-> even). If rng is null the more likely
// outcome is reported; otherwise the outcome is sampled.
ParityResult parity_map_and_measure(const CavityState& state,
                                    numerics::RngStream* rng = nullptr);

struct WignerMap {
  Eigen::VectorXd re;   // grid of Re(alpha)
  Eigen::VectorXd im;   // grid of Im(alpha)
  Eigen::MatrixXd w;    // w(i, j) = W(re[i] + i*im[j])
  double integral = 0.0;
};

// W(alpha) = (2/pi) Tr[D(alpha)^dag rho D(alpha) P]. Throws when any grid
// point violates the displacement truncation guard.
WignerMap wigner_scan(const Eigen::MatrixXcd& rho, const Eigen::VectorXd& re,
                      const Eigen::VectorXd& im);

}  // namespace cqed::cavity
