#pragma once

// Calibration experiment drivers and fitters. Every driver runs against the
// virtual-device measurement surface only (scans, shot-sampled populations);
// none reads the hidden ground truth.

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "cqed/calib/pulses.hpp"
#include "cqed/sim/device.hpp"

namespace cqed::calib {

using cplx = std::complex<double>;

// --- Resonator ----------------------------------------------------------------

struct ResonatorFitResult {
  double f_r = 0.0;        // Hz
  double kappa = 0.0;      // 1/s (angular)
  double kappa_c = 0.0;    // 1/s
  double kappa_i = 0.0;    // 1/s
  double q_c = 0.0, q_i = 0.0;
  double amplitude = 0.0, alpha_slope = 0.0, tau_v = 0.0, phi0 = 0.0;
  double f_r_err = 0.0, kappa_err = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
};

// Hanger fit with auto-derived initial guesses (min |S21| for f_r, 3 dB
// width for kappa). Throws when the data show no dip.
ResonatorFitResult fit_resonator(const std::vector<double>& f_hz,
                                 const std::vector<cplx>& s21);

struct PowerScanResult {
  double f_dressed = 0.0;          // Hz, low-power (qubit ground) resonance
  double f_bare = 0.0;             // Hz, punched-out resonance
  double lamb_shift_est = 0.0;     // Hz, f_bare - f_dressed
  double kappa_low = 0.0;          // 1/s, low-power linewidth
  double kappa_c_low = 0.0;        // 1/s
  double suggested_power_dbm = 0.0;
  double secondary_peak_offset = 0.0;  // Hz; NaN when no thermal peak seen
  std::vector<double> powers_dbm;
  std::vector<ResonatorFitResult> fits;
};

// Scans the resonator across the punchout crossover. The suggested readout
// power is the highest one whose fitted linewidth stays within 10% of the
// low-power kappa. Throws when no low/high plateau pair is found in range.
PowerScanResult resonator_power_scan(sim::Device& dev, double f_center_hz,
                                     double f_span_hz,
                                     const std::vector<double>& powers_dbm,
                                     int n_points = 401, int n_avg = 30);

// --- Qubit spectroscopy -------------------------------------------------------

struct TwoToneResult {
  double f_q = 0.0;          // Hz
  double linewidth = 0.0;    // Hz, FWHM at the accepted power
  double natural_linewidth = 0.0;  // Hz, extrapolated to zero power
  double snr = 0.0;
  double omega_drive = 0.0;  // rad/s, accepted drive rate
  double f_q_err = 0.0;
  std::vector<double> f_hz, response;  // accepted scan (raw data)
};

// Steps the spectroscopy power up from omega_drive_start (x2 per step) until
// a peak with SNR >= 5 and width <= 5x the zero-power extrapolation is
// found. Throws when no peak appears at any power.
TwoToneResult two_tone_spectroscopy(sim::Device& dev, double f_lo_hz,
                                    double f_hi_hz, int n_points, int shots,
                                    double omega_drive_start = 1.5e4,
                                    int max_steps = 14);

struct ThreeToneResult {
  double alpha = 0.0;        // Hz, f01 - f12
  double ridge_slope = 0.0;  // expected -1
  double ridge_intercept = 0.0;  // Hz, f_s1 + f_s2 on the ridge
  int n_ridge_points = 0;
};

// Locates the two-photon ridge f_s1 + f_s2 = 2 f01 - alpha on a 2-D map.
// Throws when the ridge is not found.
ThreeToneResult three_tone_anharmonicity(sim::Device& dev, double f01_hz,
                                         double f1_lo, double f1_hi,
                                         double f2_lo, double f2_hi,
                                         int n1, int n2, int shots,
                                         double omega_drive = 1e5);

// --- Pulse calibration ----------------------------------------------------------

struct RabiResult {
  double pi_amp = 0.0;
  double pi2_amp = 0.0;
  double period = 0.0;    // amplitude giving a full 2*pi rotation
  double contrast = 0.0;  // peak-to-peak of the fitted cosine
  double pi_amp_err = 0.0;
  bool converged = false;
  std::vector<double> amps, populations;
};

// Fixed-duration amplitude-Rabi: fits P(a) = B - A cos(2 pi a / period).
// Throws when the contrast is below 3x the shot-noise floor.
RabiResult rabi_calibration(sim::Device& dev, const std::vector<double>& amps,
                            const PulseStyle& style, double frame_freq,
                            int shots, double drag = 0.0);

struct CoherenceResult {
  std::vector<double> t, p;
  double time_constant = 0.0;  // T1 / T2* / T2E, s
  double time_err = 0.0;
  double freq = 0.0;           // Hz, fitted oscillation (Ramsey)
  double freq_err = 0.0;
  double exponent = 1.0;       // stretched-exponential n
  double amplitude = 0.0, offset = 0.0;
  bool converged = false;
  bool grid_too_short = false;  // decay longer than the last delay
};

CoherenceResult measure_t1(sim::Device& dev, const std::vector<double>& delays,
                           const GateAmps& amps, const PulseStyle& style,
                           double frame_freq, int shots);

// Ramsey with software (artificial) detuning applied as a phase on the
// second pi/2; fits A exp(-(t/T2)^n) (cos(2 pi f t + phi) + C) + B.
CoherenceResult measure_ramsey(sim::Device& dev,
                               const std::vector<double>& delays,
                               double artificial_detuning_hz,
                               const GateAmps& amps, const PulseStyle& style,
                               double frame_freq, int shots);

// Hahn echo (pi/2 - tau/2 - pi - tau/2 - pi/2 about -x); stretched decay.
CoherenceResult measure_echo(sim::Device& dev,
                             const std::vector<double>& delays,
                             const GateAmps& amps, const PulseStyle& style,
                             double frame_freq, int shots);

struct FreqCalResult {
  double f_q = 0.0;          // Hz, refined estimate
  double uncertainty = 0.0;  // Hz
  int rounds = 0;
  bool aliased = false;
  std::vector<double> round_corrections;  // Hz applied per round
};

// Repeated-Ramsey frequency refinement: each round doubles the total span
// (bounded by ~T2*) with the sampling kept under 0.4 cycles per point, and
// corrects the frame by (fitted f) - (artificial detuning). Stops when the
// fit uncertainty reaches the 1/(2 pi T2* sqrt(N)) bound or after 5 rounds.
FreqCalResult repeated_ramsey_frequency_cal(sim::Device& dev,
                                            double f_q_initial, double t2_guess,
                                            const GateAmps& amps,
                                            const PulseStyle& style, int shots,
                                            double initial_error_bound = 1e6);

// --- Error syndromes --------------------------------------------------------------

struct AllxyResult {
  std::array<double, 21> trace{};
  std::array<double, 21> ideal{};
  std::string syndrome;  // none | detuning | amplitude | drag | distortion
  double severity = 0.0;                 // injected-unit equivalents
  std::array<double, 3> coefficients{};  // detuning, amplitude, drag weights
};

// Runs the standard 21 gate pairs (table loaded from allxy_table_path) and
// classifies the deviation from the ideal staircase against simulator-
// generated pure-error templates by least squares.
AllxyResult allxy(sim::Device& dev, const GateAmps& amps,
                  const PulseStyle& style, double frame_freq, int shots,
                  const std::string& allxy_table_path);

struct DragCalResult {
  double d_amp = 0.0;
  std::vector<double> sweep, diff;  // population difference vs D
};

// Zero crossing of P(Yp then X9) - P(Xp then Y9) over a DRAG sweep.
// Throws when the difference does not change sign in range.
DragCalResult drag_calibration(sim::Device& dev, const GateAmps& amps,
                               const PulseStyle& style, double frame_freq,
                               int shots, double d_lo = -0.5, double d_hi = 0.5,
                               int n_sweep = 21);

struct PulseTrainResult {
  double pi_amp = 0.0;       // refined amplitude
  double epsilon = 0.0;      // fitted relative error of the input amplitude
  int rounds = 0;
  std::vector<int> n_list;        // first round (raw data)
  std::vector<double> deviation;  // asin(1 - 2 P_N) per N, first round
};

// pi/2 followed by 2N pi pulses: an amplitude error accumulates a rotation-
// angle deviation linear in N. The estimator gain is below unity on a
// weakly anharmonic ladder, so the correction is iterated until the fitted
// error falls under 1.5e-4 (or max_rounds).
PulseTrainResult pulse_train_amplitude_cal(sim::Device& dev,
                                           const GateAmps& amps,
                                           const PulseStyle& style,
                                           double frame_freq,
                                           const std::vector<int>& n_list,
                                           int shots, int max_rounds = 6);

// --- Mixer ------------------------------------------------------------------------

struct MixerCalResult {
  double i_offset = 0.0, q_offset = 0.0, imbalance = 0.0, skew = 0.0;
  double lo_suppression_db = 0.0;
  double sideband_suppression_db = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Coordinate descent (offsets first, then imbalance/skew) on the mixer
// output spectrum; targets >= 60 dB suppression of the LO leak and the
// undesired sideband. Throws on non-convergence.
MixerCalResult mixer_calibration(sim::Device& dev, int max_iterations = 60);

// --- Flux ----------------------------------------------------------------------

struct FluxSweepResult {
  double sweet_spot_a = 0.0;       // bias of maximum f_r
  std::vector<double> bias, f_r;   // fitted resonance per bias point
};

// Sweeps the bias current, fits f_r at each point, and returns the bias of
// maximum resonator frequency (the qubit sweet spot for omega_q < omega_r).
FluxSweepResult resonator_flux_sweep(sim::Device& dev, double f_center_hz,
                                     double f_span_hz,
                                     const std::vector<double>& bias_a,
                                     double power_dbm, int n_points = 201,
                                     int n_avg = 20);

}  // namespace cqed::calib
