#pragma once

// Readout figures of merit: optimal integration weights, measurement-induced
// dephasing, empirical SNR and measurement efficiency, assignment matrices
// with fidelity, threshold digitization, and QND-ness via the butterfly
// protocol (two consecutive measurements after purified preparation).

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cqed/numerics/rng.hpp"
#include "cqed/sim/device.hpp"
#include "cqed/sim/dynamics.hpp"

namespace cqed::readout {

// Matched filter w(t) = conj(alpha_out,g - alpha_out,e), normalized to unit
// energy (sum |w|^2 dt = 1). One weight per grid interval. Throws
// std::invalid_argument when the trajectories are identical.
std::vector<std::complex<double>> optimal_weights(
    const sim::ReadoutTrajectory& traj_g, const sim::ReadoutTrajectory& traj_e);

struct DephasingCurves {
  std::vector<double> t;
  std::vector<double> gamma_inst;  // Gamma_phi(t) = (kappa/2) |a_g - a_e|^2
  std::vector<double> gamma_int;   // gamma_phi(tau) = integral of Gamma_phi
};

DephasingCurves measurement_dephasing(const sim::ReadoutTrajectory& traj_g,
                                      const sim::ReadoutTrajectory& traj_e,
                                      double kappa);

struct EfficiencyResult {
  std::vector<double> t;           // integration time grid
  std::vector<double> snr;         // empirical SNR(tau)
  std::vector<double> snr_theory;  // deterministic SNR(tau) for these weights
  double eta = 0.0;                // SNR^2 / (4 gamma_phi) at the final tau
  double eta_sigma = 0.0;          // statistical uncertainty of eta
  int shots_per_label = 0;
};

// Monte-Carlo SNR(tau) from simulated single-shot records around the two
// average trajectories, plus the efficiency eta = SNR^2/(4 gamma_phi).
// Throws std::invalid_argument for fewer than 100 shots per label.
EfficiencyResult snr_and_efficiency(const sim::ReadoutTrajectory& traj_g,
                                    const sim::ReadoutTrajectory& traj_e,
                                    const std::vector<std::complex<double>>& weights,
                                    const sim::GroundTruth& gt, int n_shots,
                                    numerics::RngStream& rng);

// Projection x = Re(conj(axis) * s); outcome 1 when x > threshold.
struct Digitizer {
  std::complex<double> axis;  // unit phasor from cloud g toward cloud e
  double threshold = 0.0;
  double mean_g = 0.0, mean_e = 0.0;  // projected cloud centers
  double sigma_g = 0.0, sigma_e = 0.0;
  bool max_likelihood = false;
};

// Builds the discrimination axis and threshold from labeled calibration
// clouds. Default: midpoint between the projected means; the
// maximum-likelihood option solves the 1-D two-Gaussian crossing for
// unequal variances. Throws std::invalid_argument on degenerate clouds.
Digitizer make_digitizer(const std::vector<std::complex<double>>& calib_g,
                         const std::vector<std::complex<double>>& calib_e,
                         bool max_likelihood = false);

std::vector<int> threshold_digitize(const std::vector<std::complex<double>>& shots,
                                    const Digitizer& dig);

struct AssignmentMatrix {
  Eigen::Matrix2d lambda;  // lambda(m, prep) = P(m | prep); columns sum to 1
  Digitizer digitizer;
  double fidelity() const {
    return 1.0 - (lambda(0, 1) + lambda(1, 0)) / 2.0;
  }
};

// Estimates Lambda_M from labeled batches, digitizing with a threshold
// derived from the same batches (or a caller-provided digitizer).
AssignmentMatrix assignment_matrix(const std::vector<std::complex<double>>& shots_g,
                                   const std::vector<std::complex<double>>& shots_e,
                                   bool max_likelihood = false);
AssignmentMatrix assignment_matrix(const std::vector<std::complex<double>>& shots_g,
                                   const std::vector<std::complex<double>>& shots_e,
                                   const Digitizer& dig);

struct QndResult {
  double qndness = 0.0;
  bool valid = false;    // false when |det Lambda| <= 0.1 (no inversion)
  bool clipped = false;  // some inverted probability fell outside [0, 1]
  Eigen::Matrix2d post_given_prep;  // P(state_o = row | prep = column)
};

// Q from digitized butterfly records: P(state_o) = Lambda^-1 P(m2),
// conditioned on (prep, m1) and marginalized over m1.
QndResult butterfly_qndness(const std::vector<int>& m1_prep0,
                            const std::vector<int>& m2_prep0,
                            const std::vector<int>& m1_prep1,
                            const std::vector<int>& m2_prep1,
                            const AssignmentMatrix& lambda);

struct ButterflyResult {
  AssignmentMatrix lambda;
  QndResult qnd;
  double kept_fraction = 0.0;  // shots surviving preparation post-selection
};

// Full protocol on a device: calibration clouds -> digitizer, purification
// measurement M0 post-selected 2 sigma beyond the threshold on the ground
// side, then M1/M2 statistics -> Lambda_M, F, and Q.
ButterflyResult run_butterfly(sim::Device& dev, int n_shots, double a_in,
                              double tau, int n_samples);

}  // namespace cqed::readout
