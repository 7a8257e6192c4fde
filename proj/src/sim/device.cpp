#include "cqed/sim/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cqed/constants.hpp"
#include "cqed/sim/responses.hpp"

namespace cqed::sim {

using cplx = std::complex<double>;

Device::Device(GroundTruth gt, std::uint64_t seed)
    : gt_(std::move(gt)), seed_(seed) {
  gt_.validate();
}

numerics::RngStream Device::next_stream() {
  return numerics::RngStream(seed_, ++call_counter_);
}

std::vector<S21Point> Device::scan_s21(const std::vector<double>& f_hz,
                                       double power_dbm, int n_avg) {
  return scan_s21_at_bias(f_hz, power_dbm, n_avg, gt_.sweet_spot_a);
}

std::vector<S21Point> Device::scan_s21_at_bias(const std::vector<double>& f_hz,
                                               double power_dbm, int n_avg,
                                               double bias_a) {
  auto rng = next_stream();
  GroundTruth at = gt_;
  at.omega_q01 = qubit_freq_at_bias(bias_a, gt_);
  std::vector<S21Point> out;
  out.reserve(f_hz.size());
  const double sigma = noise_floor / std::sqrt(double(std::max(n_avg, 1)));
  for (double f : f_hz) {
    const cplx mixed = (1.0 - at.n_th) * s21_response(f, power_dbm, 0, at) +
                       at.n_th * s21_response(f, power_dbm, 1, at);
    out.push_back({f, mixed + sigma * cplx(rng.normal(), rng.normal())});
  }
  return out;
}

std::vector<double> Device::scan_two_tone(const std::vector<double>& f_hz,
                                          double omega_drive, int shots) {
  auto rng = next_stream();
  std::vector<double> out;
  out.reserve(f_hz.size());
  for (double f : f_hz) {
    const double p = qubit_spectroscopy_response(f, omega_drive, gt_);
    out.push_back(shots > 0
                      ? double(rng.binomial(shots, p)) / double(shots)
                      : p);
  }
  return out;
}

std::vector<double> Device::scan_three_tone(const std::vector<double>& f_s1,
                                            const std::vector<double>& f_s2,
                                            double omega_drive, int shots) {
  auto rng = next_stream();
  const double f01 = gt_.omega_q01;
  const double ridge_center = 2.0 * f01 - gt_.anharmonicity;  // f01 + f12
  const double t2 = gt_.t2_star();
  const double hw1 =
      std::sqrt(1.0 / (t2 * t2) + omega_drive * omega_drive * gt_.t1 / t2) /
      kTwoPi;
  const double hw2 = 2.0 * hw1;  // two-photon ridge is broader
  std::vector<double> out;
  out.reserve(f_s1.size() * f_s2.size());
  for (double f2 : f_s2)
    for (double f1 : f_s1) {
      const double d1 = (f1 - f01) / hw1;
      const double dr = (f1 + f2 - ridge_center) / hw2;
      double p = 0.45 / (1.0 + d1 * d1) + 0.35 / (1.0 + dr * dr);
      p = std::min(p, 0.55) + gt_.n_th;
      out.push_back(shots > 0
                        ? double(rng.binomial(shots, std::min(p, 1.0))) /
                              double(shots)
                        : p);
    }
  return out;
}

double Device::assignment_error() const {
  if (assignment_error_cache_ >= 0.0) return assignment_error_cache_;
  const int n = 200;
  auto tg = readout_avg(0, default_readout_a_in, default_readout_tau, n);
  auto te = readout_avg(1, default_readout_a_in, default_readout_tau, n);
  double sep2 = 0.0;
  const double dt = default_readout_tau / n;
  for (std::size_t i = 0; i < tg.alpha.size(); ++i)
    sep2 += std::norm(tg.alpha[i] - te.alpha[i]) * dt;
  const double snr2 = 2.0 * gt_.kappa() * gt_.eta * sep2;  // eta 4 gamma_phi
  assignment_error_cache_ =
      0.5 * std::erfc(std::sqrt(snr2) / (2.0 * std::numbers::sqrt2));
  return assignment_error_cache_;
}

double Device::ideal_population(const PulseSequence& seq) {
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(3, 3);
  rho0(0, 0) = 1.0 - gt_.n_th;
  rho0(1, 1) = gt_.n_th;
  const double total = seq.duration();
  auto traj = evolve_pulse(seq, rho0, gt_, {0.0, total});
  const double p_exc = 1.0 - traj.back()(0, 0).real();
  const double eps = assignment_error();
  return p_exc * (1.0 - eps) + (1.0 - p_exc) * eps;
}

double Device::measure_population(const PulseSequence& seq, int shots) {
  const double p = ideal_population(seq);
  if (shots <= 0) return p;
  auto rng = next_stream();
  return double(rng.binomial(shots, std::clamp(p, 0.0, 1.0))) / double(shots);
}

ReadoutTrajectory Device::readout_avg(int state, double a_in, double tau,
                                      int n_samples) const {
  std::vector<double> grid;
  grid.reserve(n_samples + 1);
  for (int i = 0; i <= n_samples; ++i) grid.push_back(tau * i / n_samples);
  return readout_trajectory(state, {cplx(a_in, 0.0)}, gt_, grid);
}

ShotBatch Device::readout_shots(int prep, int n_shots, double a_in, double tau,
                                int n_samples, const std::vector<cplx>& weights,
                                bool include_prep_errors) {
  auto tg = readout_avg(0, a_in, tau, n_samples);
  auto te = readout_avg(1, a_in, tau, n_samples);
  std::vector<cplx> w = weights;
  if (w.empty()) {
    w.reserve(tg.alpha.size());
    for (std::size_t i = 0; i < tg.alpha.size(); ++i)
      w.push_back(std::conj(te.alpha_out[i] - tg.alpha_out[i]));
    w = normalize_weights(std::move(w), tau / n_samples);
  }
  auto rng = next_stream();
  auto batch = acquire_shots(tg, te, prep, w, n_shots, gt_, rng,
                             include_prep_errors);
  batch.seed = seed_;
  return batch;
}

std::vector<std::pair<cplx, cplx>> Device::paired_shots(
    int prep, int n_shots, double a_in, double tau, int n_samples,
    const std::vector<cplx>& weights) {
  auto tg = readout_avg(0, a_in, tau, n_samples);
  auto te = readout_avg(1, a_in, tau, n_samples);
  auto rng = next_stream();
  const double noise_sigma =
      std::sqrt(gt_.kappa_c / (2.0 * gt_.kappa() * gt_.eta));
  const double dt = tau / n_samples;

  std::vector<std::pair<cplx, cplx>> out;
  out.reserve(n_shots);
  auto integrate = [&](int& state) {
    double flip = std::numeric_limits<double>::infinity();
    if (state == 1) flip = rng.exponential(1.0 / gt_.t1);
    cplx s = 0.0;
    for (std::size_t i = 0; i + 1 < tg.t.size(); ++i) {
      const bool excited = (state == 1) && (tg.t[i] < flip);
      const cplx field = excited ? te.alpha_out[i] : tg.alpha_out[i];
      s += std::conj(weights[i]) * field * dt;
    }
    if (state == 1 && flip < tau) state = 0;  // decay persists past the window
    s += noise_sigma * cplx(rng.normal(), rng.normal());
    return s;
  };
  for (int k = 0; k < n_shots; ++k) {
    int state = prep;
    if (rng.bernoulli(gt_.n_th)) state = 1 - state;
    const cplx m1 = integrate(state);
    const cplx m2 = integrate(state);
    out.emplace_back(m1, m2);
  }
  return out;
}

std::vector<Device::ButterflyRecord> Device::butterfly_shots(
    int prep, int n_shots, double a_in, double tau, int n_samples,
    const std::vector<cplx>& weights) {
  auto tg = readout_avg(0, a_in, tau, n_samples);
  auto te = readout_avg(1, a_in, tau, n_samples);
  auto rng = next_stream();
  const double noise_sigma =
      std::sqrt(gt_.kappa_c / (2.0 * gt_.kappa() * gt_.eta));
  const double dt = tau / n_samples;

  auto integrate = [&](int& state) {
    double flip = std::numeric_limits<double>::infinity();
    if (state == 1) flip = rng.exponential(1.0 / gt_.t1);
    cplx s = 0.0;
    for (std::size_t i = 0; i + 1 < tg.t.size(); ++i) {
      const bool excited = (state == 1) && (tg.t[i] < flip);
      const cplx field = excited ? te.alpha_out[i] : tg.alpha_out[i];
      s += std::conj(weights[i]) * field * dt;
    }
    if (state == 1 && flip < tau) state = 0;
    s += noise_sigma * cplx(rng.normal(), rng.normal());
    return s;
  };

  std::vector<ButterflyRecord> out;
  out.reserve(n_shots);
  for (int k = 0; k < n_shots; ++k) {
    int state = rng.bernoulli(gt_.n_th) ? 1 : 0;
    ButterflyRecord rec;
    rec.m0 = integrate(state);
    if (prep == 1) state = 1 - state;  // preparation pi pulse
    rec.m1 = integrate(state);
    rec.m2 = integrate(state);
    out.push_back(rec);
  }
  return out;
}

double Device::zz_echo_population(double tau, double readout_phase, int shots) {
  // Echo on this qubit with the neighbor toggled between the arms leaves the
  // ZZ phase zeta/2 * tau unechoed while static detunings cancel.
  const double phase = std::numbers::pi * gt_.zeta * tau + readout_phase;
  const double contrast = std::exp(-tau / gt_.t2_star());
  double p = 0.5 * (1.0 - contrast * std::cos(phase));
  const double eps = assignment_error();
  p = p * (1.0 - eps) + (1.0 - p) * eps;
  if (shots <= 0) return p;
  auto rng = next_stream();
  return double(rng.binomial(shots, std::clamp(p, 0.0, 1.0))) / double(shots);
}

MixerSpectrum Device::mixer_probe(double i_offset, double q_offset,
                                  double imbalance, double skew) const {
  return mixer_output_spectrum(i_offset, q_offset, imbalance, skew, 5e9, -100e6,
                               gt_.mixer);
}

}  // namespace cqed::sim
