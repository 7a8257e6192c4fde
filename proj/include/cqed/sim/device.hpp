#pragma once

// The virtual device. Wraps the hidden GroundTruth behind the same surface
// a hardware driver would expose: frequency sweeps, pulse experiments with
// shot sampling, and raw readout shot acquisition. All randomness flows
// through per-call RNG streams derived from the device seed and a call
// counter, so identical call sequences reproduce identical data.

#include <complex>
#include <cstdint>
#include <vector>

#include "cqed/numerics/rng.hpp"
#include "cqed/sim/dynamics.hpp"
#include "cqed/sim/ground_truth.hpp"
#include "cqed/sim/responses.hpp"

namespace cqed::sim {

struct S21Point {
  double f_hz;
  std::complex<double> s21;
};

class Device {
 public:
  Device(GroundTruth gt, std::uint64_t seed);

  const GroundTruth& truth() const { return gt_; }  // test/oracle access only
  std::uint64_t seed() const { return seed_; }

  // --- frequency-domain scans ------------------------------------------
  // Hanger response averaged over n_avg repetitions, additive complex
  // measurement noise of std noise_floor/sqrt(n_avg) per point. The qubit
  // is thermally mixed (population n_th).
  std::vector<S21Point> scan_s21(const std::vector<double>& f_hz,
                                 double power_dbm, int n_avg);
  std::vector<S21Point> scan_s21_at_bias(const std::vector<double>& f_hz,
                                         double power_dbm, int n_avg,
                                         double bias_a);

  // Two-tone spectroscopy: excited population vs spectroscopy frequency at
  // drive rate omega_drive (rad/s), sampled with binomial shot noise.
  std::vector<double> scan_two_tone(const std::vector<double>& f_hz,
                                    double omega_drive, int shots);

  // Two-drive (three-tone) map: populations on the (f_s1, f_s2) grid with
  // the f_s1 + f_s2 = f01 + f12 two-photon ridge.
  std::vector<double> scan_three_tone(const std::vector<double>& f_s1,
                                      const std::vector<double>& f_s2,
                                      double omega_drive, int shots);

  // --- pulse experiments ------------------------------------------------
  // Runs the sequence from the thermal initial state and measures the
  // excited-state population with shot sampling plus readout assignment
  // error. Levels >= 2 are counted as "excited".
  double measure_population(const PulseSequence& seq, int shots);

  // Noise-free population (tests and syndrome-template generation).
  double ideal_population(const PulseSequence& seq);

  // --- readout ------------------------------------------------------------
  // Average cavity trajectories for the standard square readout pulse.
  ReadoutTrajectory readout_avg(int state, double a_in, double tau,
                                int n_samples) const;
  ShotBatch readout_shots(int prep, int n_shots, double a_in, double tau,
                          int n_samples,
                          const std::vector<std::complex<double>>& weights = {},
                          bool include_prep_errors = true);
  // Two consecutive measurements per shot (butterfly protocol); returns
  // outcome pairs. The post-M1 state carries any mid-M1 decay.
  std::vector<std::pair<std::complex<double>, std::complex<double>>>
  paired_shots(int prep, int n_shots, double a_in, double tau, int n_samples,
               const std::vector<std::complex<double>>& weights);

  // Full butterfly record: purification measurement M0 on the thermal
  // state, preparation pulse (pi flip when prep = 1), then M1 and M2.
  // State decays persist across the three integration windows.
  struct ButterflyRecord {
    std::complex<double> m0, m1, m2;
  };
  std::vector<ButterflyRecord> butterfly_shots(
      int prep, int n_shots, double a_in, double tau, int n_samples,
      const std::vector<std::complex<double>>& weights);

  // ZZ echo point against the coupled neighbor: echo on this qubit with the
  // neighbor toggled between the two arms; returns P1 at the given delay
  // with the final pi/2 applied about the given axis phase.
  double zz_echo_population(double tau, double readout_phase, int shots);

  // Mixer spectrum at the given correction settings.
  MixerSpectrum mixer_probe(double i_offset, double q_offset, double imbalance,
                            double skew) const;

  // Readout assignment error probability of the default digitizer.
  double assignment_error() const;

  double noise_floor = 0.01;       // S21 additive noise std per repetition
  double default_readout_tau = 1e-6;
  double default_readout_a_in = 3e3;  // sqrt(photon flux), units 1/sqrt(s)

 private:
  numerics::RngStream next_stream();

  GroundTruth gt_;
  std::uint64_t seed_;
  std::uint64_t call_counter_ = 0;
  mutable double assignment_error_cache_ = -1.0;
};

}  // namespace cqed::sim
