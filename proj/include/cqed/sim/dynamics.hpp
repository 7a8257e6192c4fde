#pragma once

// Time-domain pieces of the virtual device: driven 3-level transmon
// evolution with decoherence, dispersive readout field trajectories, and
// single-shot heterodyne sampling.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cqed/numerics/rng.hpp"
#include "cqed/sim/ground_truth.hpp"

namespace cqed::sim {

enum class Channel { Qubit, Readout, Flux };

struct PulseSegment {
  Channel target = Channel::Qubit;
  std::vector<std::complex<double>> envelope;  // I + iQ, dimensionless
  double carrier_detuning = 0.0;  // Hz, relative to the sequence frame
  double phase = 0.0;             // rad
  double start = 0.0;             // s
};

struct PulseSequence {
  double sample_period = 1e-9;  // s
  double frame_freq = 0.0;      // Hz, rotating-frame (carrier) frequency
  std::vector<PulseSegment> channels;

  double duration() const;
  void validate() const;  // finite envelopes, no same-channel overlap, Nyquist
};

struct ShotBatch {
  std::vector<std::complex<double>> outcomes;
  std::vector<int> prep_labels;
  int n_shots = 0;
  double integration_window = 0.0;  // s
  unsigned long long seed = 0;
};

// Integrates the rotating-frame generator
//   H/hbar = delta n - (alpha/2) q^dag^2 q^2 + (Omega(t) q^dag + h.c.)/2
// on the truncated ladder (default 3 levels) with T1 and pure-dephasing
// collapse operators. Returns rho at the requested times (defaults to the
// envelope sample grid).
std::vector<Eigen::MatrixXcd> evolve_pulse(const PulseSequence& seq,
                                           const Eigen::MatrixXcd& rho0,
                                           const GroundTruth& gt,
                                           std::vector<double> t_grid = {},
                                           int levels = 3);

struct ReadoutTrajectory {
  std::vector<double> t;
  std::vector<std::complex<double>> alpha;      // intracavity field
  std::vector<std::complex<double>> alpha_out;  // a_in + sqrt(kappa_c) alpha
};

// Dispersive cavity response for a fixed qubit state under a
// piecewise-constant input field a_in(t) (one value per grid interval, or a
// single constant). Solved exactly segment by segment.
ReadoutTrajectory readout_trajectory(int qubit_state,
                                     const std::vector<std::complex<double>>& a_in,
                                     const GroundTruth& gt,
                                     const std::vector<double>& t_grid);

// Integrated single shots: s = sum w* alpha_out dt + Gaussian noise whose
// per-quadrature variance kappa_c/(2 kappa eta) * (per-sample scaling)
// realizes SNR^2(tau) = eta 4 gamma_phi(tau) for unit-energy weights.
// Preparation includes thermal excitation (n_th) and a single mid-readout
// T1 flip at an exponentially distributed time.
ShotBatch acquire_shots(const ReadoutTrajectory& traj_g,
                        const ReadoutTrajectory& traj_e, int prep,
                        const std::vector<std::complex<double>>& weights,
                        int n_shots, const GroundTruth& gt,
                        numerics::RngStream& rng,
                        bool include_prep_errors = true);

// Unit-energy weights: sum |w|^2 dt = 1.
std::vector<std::complex<double>> normalize_weights(
    std::vector<std::complex<double>> w, double dt);

}  // namespace cqed::sim
