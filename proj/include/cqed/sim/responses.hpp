#pragma once

// Closed-form measurement responses of the virtual device: the hanger S21
// (with high-power punchout), power-broadened qubit spectroscopy, the
// exact two-transmon spectrum for residual-ZZ, and the IQ-mixer output
// spectrum model.

#include <complex>
#include <vector>

#include "cqed/sim/ground_truth.hpp"

namespace cqed::sim {

// Probe power (dBm at the fridge input) to steady-state intracavity photon
// number on resonance: n = 4 kappa_c P_dev / (hbar w_r kappa^2), with P_dev
// the power after the configured input-line attenuation.
double probe_photons(double probe_power_dbm, const GroundTruth& gt);

std::complex<double> s21_response(double f_hz, double probe_power_dbm,
                                  int qubit_state, const GroundTruth& gt);

// Steady-state excited population under a spectroscopy tone of drive rate
// omega_drive (rad/s) at frequency f_s.
double qubit_spectroscopy_response(double f_s_hz, double omega_drive,
                                   const GroundTruth& gt);

struct TwoTransmonSpectrum {
  double e01;          // Hz (one excitation in qubit j)
  double e10;          // Hz (one excitation in qubit i)
  double e11;          // Hz
  double zeta_exact;   // Hz, E11 - E01 - E10 with E00 = 0
  double zeta_approx;  // Hz, perturbative two-level-pair estimate
};

TwoTransmonSpectrum two_transmon_spectrum(double f_i_hz, double f_j_hz,
                                          double alpha_i_hz, double alpha_j_hz,
                                          double j1_hz);

struct MixerSpectrum {
  double p_lo;   // LO-leak power relative to the desired sideband
  double p_usb;  // undesired sideband, same normalization
  double p_lsb;  // desired sideband (= 1 at ideal settings)
};

// Settings (offsets, residual imbalance/skew after correction) against the
// device's hidden mixer imperfections.
MixerSpectrum mixer_output_spectrum(double i_offset, double q_offset,
                                    double imbalance, double skew,
                                    double f_lo_hz, double f_if_hz,
                                    const MixerModel& hidden);

// Tunable-device flux models used by the resonator-flux-sweep experiment.
double qubit_freq_at_bias(double bias_a, const GroundTruth& gt);
double resonator_freq_at_bias(double bias_a, int qubit_state,
                              const GroundTruth& gt);

}  // namespace cqed::sim
