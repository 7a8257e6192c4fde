#include "cqed/calib/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "cqed/numerics/fit.hpp"

namespace cqed::calib {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

// Dominant oscillation frequency of uniformly sampled data by periodogram.
double dominant_frequency(const std::vector<double>& x,
                          const std::vector<double>& y) {
  const std::size_t n = y.size();
  const double span = x.back() - x.front();
  double best_f = 0.0, best_p = -1.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  const int n_bins = static_cast<int>(4 * n);
  for (int k = 1; k <= n_bins; ++k) {
    const double f = 0.5 * k / span * static_cast<double>(n) /
                     static_cast<double>(n_bins);  // up to Nyquist
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += (y[i] - mean) * std::exp(cplx(0.0, -kTwoPi * f * x[i]));
    if (std::norm(acc) > best_p) {
      best_p = std::norm(acc);
      best_f = f;
    }
  }
  return best_f;
}

double shot_sigma(int shots) {
  return shots > 0 ? 0.5 / std::sqrt(static_cast<double>(shots)) : 1e-6;
}

}  // namespace

// --- fit_resonator -----------------------------------------------------------

ResonatorFitResult fit_resonator(const std::vector<double>& f_hz,
                                 const std::vector<cplx>& s21) {
  if (f_hz.size() != s21.size() || f_hz.size() < 16)
    throw std::invalid_argument("fit_resonator: need matched grids, >= 16 points");
  const std::size_t n = f_hz.size();

  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(s21[i]);

  // Baseline from the outer 20% of points, dip from the global minimum.
  std::vector<double> edges;
  for (std::size_t i = 0; i < n; ++i)
    if (i < n / 10 || i >= n - n / 10) edges.push_back(mag[i]);
  const double baseline = median(edges);
  double scatter = 0.0;
  for (double m : edges) scatter += (m - baseline) * (m - baseline);
  scatter = std::sqrt(scatter / static_cast<double>(edges.size()));

  const auto min_it = std::min_element(mag.begin(), mag.end());
  const std::size_t i_min = static_cast<std::size_t>(min_it - mag.begin());
  const double depth = baseline - *min_it;
  if (depth < 5.0 * std::max(scatter, 1e-12))
    throw std::runtime_error("fit_resonator: no dip found (flat data)");

  // 3 dB-style width at half depth.
  const double level = baseline - 0.5 * depth;
  std::size_t lo = i_min, hi = i_min;
  while (lo > 0 && mag[lo] < level) --lo;
  while (hi + 1 < n && mag[hi] < level) ++hi;
  const double width = std::max(f_hz[hi] - f_hz[lo], f_hz[1] - f_hz[0]);

  // Well-scaled internal parameters (all O(1)): frequency offset and rates
  // in MHz, electrical delay in ns.
  const double f_center = f_hz[i_min];
  Eigen::VectorXd p0(7);
  p0 << 0.0, kTwoPi * width / 1e6, kTwoPi * width * (depth / baseline) / 1e6,
      baseline, 0.0, 0.0, std::arg(s21[i_min < n / 2 ? n - 1 : 0]);

  const auto model = [f_center](const Eigen::VectorXd& x,
                                const Eigen::VectorXd& p) {
    Eigen::VectorXcd y(x.size());
    const double f_r = f_center + p(0) * 1e6;
    const double kappa = p(1) * 1e6;
    const double kappa_c = p(2) * 1e6;
    const double tau_v = p(5) * 1e-9;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double omega = kTwoPi * x(i);
      const double omega_r = kTwoPi * f_r;
      const cplx lorentz = (kappa_c / kappa) /
                           (1.0 + cplx(0.0, 2.0) * (omega - omega_r) / kappa);
      const double base = 1.0 + p(4) * (x(i) - f_r) / f_r;
      y(i) = p(3) * base * (1.0 - lorentz) *
             std::exp(cplx(0.0, tau_v * (omega - omega_r) + p(6)));
    }
    return y;
  };

  Eigen::VectorXd x(n);
  Eigen::VectorXcd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i) = f_hz[i];
    y(i) = s21[i];
  }
  const double span_mhz = (f_hz.back() - f_hz.front()) / 1e6;
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(7) << -span_mhz, 1e-4, 0.0, 1e-6, -1e3, -1e3,
                -10.0)
                   .finished();
  opts.upper = (Eigen::VectorXd(7) << span_mhz, 1e5, 1e5, 1e3, 1e3, 1e3, 10.0)
                   .finished();
  const auto fit = numerics::least_squares_fit(model, x, y, p0, opts);

  ResonatorFitResult out;
  out.f_r = f_center + fit.params(0) * 1e6;
  out.kappa = fit.params(1) * 1e6;
  out.kappa_c = std::min(fit.params(2), fit.params(1)) * 1e6;
  out.kappa_i = out.kappa - out.kappa_c;
  out.q_c = out.kappa_c > 0.0 ? kTwoPi * out.f_r / out.kappa_c : 0.0;
  out.q_i = out.kappa_i > 0.0 ? kTwoPi * out.f_r / out.kappa_i : 0.0;
  out.amplitude = fit.params(3);
  out.alpha_slope = fit.params(4);
  out.tau_v = fit.params(5) * 1e-9;
  out.phi0 = fit.params(6);
  out.f_r_err = fit.stderr_of(0) * 1e6;
  out.kappa_err = fit.stderr_of(1) * 1e6;
  out.residual_norm = fit.residual_norm;
  out.converged = fit.converged;
  return out;
}

// --- resonator_power_scan -------------------------------------------------------

PowerScanResult resonator_power_scan(sim::Device& dev, double f_center_hz,
                                     double f_span_hz,
                                     const std::vector<double>& powers_dbm,
                                     int n_points, int n_avg) {
  if (powers_dbm.size() < 4)
    throw std::invalid_argument("resonator_power_scan: need >= 4 powers");
  std::vector<double> powers = powers_dbm;
  std::sort(powers.begin(), powers.end());

  std::vector<double> grid(n_points);
  for (int i = 0; i < n_points; ++i)
    grid[i] = f_center_hz + f_span_hz * (static_cast<double>(i) / (n_points - 1) - 0.5);

  PowerScanResult out;
  out.powers_dbm = powers;
  std::vector<std::vector<sim::S21Point>> raw;
  for (double p : powers) {
    raw.push_back(dev.scan_s21(grid, p, n_avg));
    std::vector<cplx> s(n_points);
    for (int i = 0; i < n_points; ++i) s[i] = raw.back()[i].s21;
    out.fits.push_back(fit_resonator(grid, s));
  }

  const double f_tol = out.fits.front().kappa / kTwoPi / 10.0;
  const bool low_plateau =
      std::abs(out.fits[0].f_r - out.fits[1].f_r) < f_tol;
  const std::size_t m = out.fits.size();
  const bool high_plateau =
      std::abs(out.fits[m - 1].f_r - out.fits[m - 2].f_r) < f_tol;
  if (!low_plateau || !high_plateau)
    throw std::runtime_error(
        "resonator_power_scan: power range does not bracket the punchout "
        "crossover");

  out.f_dressed = out.fits.front().f_r;
  out.f_bare = out.fits.back().f_r;
  out.lamb_shift_est = out.f_bare - out.f_dressed;
  out.kappa_low = out.fits.front().kappa;
  out.kappa_c_low = out.fits.front().kappa_c;

  // Highest power whose line shape still matches the low-power one.
  out.suggested_power_dbm = powers.front();
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(out.fits[k].kappa - out.kappa_low) < 0.1 * out.kappa_low &&
        std::abs(out.fits[k].f_r - out.f_dressed) < f_tol)
      out.suggested_power_dbm = powers[k];
  }

  // Thermal secondary dip: residual of the low-power magnitude after
  // removing the fitted single-dip model.
  out.secondary_peak_offset = std::numeric_limits<double>::quiet_NaN();
  {
    const auto& fit = out.fits.front();
    const double hw = fit.kappa / kTwoPi;
    double best = 0.0, best_f = 0.0;
    for (int i = 1; i + 1 < n_points; ++i) {
      const double f = grid[i];
      if (std::abs(f - fit.f_r) < 0.5 * hw) continue;
      const double omega = kTwoPi * f, omega_r = kTwoPi * fit.f_r;
      const cplx lorentz = (fit.kappa_c / fit.kappa) /
                           (1.0 + cplx(0.0, 2.0) * (omega - omega_r) / fit.kappa);
      const double model_mag =
          fit.amplitude * (1.0 + fit.alpha_slope * (f - fit.f_r) / fit.f_r) *
          std::abs(1.0 - lorentz);
      // Average three neighbors to suppress point noise.
      const double meas = (std::abs(raw.front()[i - 1].s21) +
                           std::abs(raw.front()[i].s21) +
                           std::abs(raw.front()[i + 1].s21)) /
                          3.0;
      const double dip = model_mag - meas;
      if (dip > best) {
        best = dip;
        best_f = f;
      }
    }
    const double sigma = dev.noise_floor / std::sqrt(double(n_avg) * 3.0);
    if (best > 6.0 * sigma) out.secondary_peak_offset = best_f - fit.f_r;
  }
  return out;
}

// --- two_tone_spectroscopy -------------------------------------------------------

namespace {

struct PeakFit {
  double f0, hw, amp, base, f0_err;
  bool converged;
};

PeakFit fit_lorentzian_peak(const std::vector<double>& f,
                            const std::vector<double>& y, double hw_guess) {
  Eigen::VectorXd x(f.size());
  Eigen::VectorXd yy(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    x(i) = f[i];
    yy(i) = y[i];
  }
  const double base = median(y);
  int i_max = 0;
  yy.maxCoeff(&i_max);
  Eigen::VectorXd p0(4);
  p0 << x(i_max), hw_guess, yy(i_max) - base, base;
  const auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    return (p(2) / (1.0 + ((xs.array() - p(0)) / p(1)).square()) + p(3))
        .matrix()
        .eval();
  };
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(4) << x.minCoeff(), 1e-3, 0.0, -1.0).finished();
  opts.upper =
      (Eigen::VectorXd(4) << x.maxCoeff(), x.maxCoeff() - x.minCoeff(), 1.5, 1.5)
          .finished();
  const auto fit = numerics::least_squares_fit(model, x, yy, p0, opts);
  return {fit.params(0), fit.params(1), fit.params(2), fit.params(3),
          fit.stderr_of(0), fit.converged};
}

}  // namespace

TwoToneResult two_tone_spectroscopy(sim::Device& dev, double f_lo_hz,
                                    double f_hi_hz, int n_points, int shots,
                                    double omega_drive_start, int max_steps) {
  std::vector<double> grid(n_points);
  for (int i = 0; i < n_points; ++i)
    grid[i] = f_lo_hz + (f_hi_hz - f_lo_hz) * i / (n_points - 1);
  const double sigma = std::max(shot_sigma(shots), 1e-4);
  const double hw_guess = (f_hi_hz - f_lo_hz) / 50.0;

  struct Attempt {
    double omega;
    PeakFit peak;
    double snr;
    std::vector<double> response;
  };
  std::vector<Attempt> usable;
  for (int k = 0; k < max_steps; ++k) {
    const double omega = omega_drive_start * std::pow(2.0, k);
    auto resp = dev.scan_two_tone(grid, omega, shots);
    auto peak = fit_lorentzian_peak(grid, resp, hw_guess);
    const double snr = peak.amp / sigma;
    if (peak.converged && snr >= 3.0)
      usable.push_back({omega, peak, snr, std::move(resp)});
    if (!usable.empty() && usable.back().snr >= 5.0) break;
  }
  if (usable.empty() || usable.back().snr < 5.0)
    throw std::runtime_error("two_tone_spectroscopy: no peak found in span");

  // Natural linewidth extrapolation from the two weakest usable scans via
  // w^2 = w0^2 + c * omega^2 (power broadening).
  const auto& acc = usable.back();
  double w0 = acc.peak.hw;
  if (usable.size() >= 2) {
    const auto& a = usable[0];
    const auto& b = usable[usable.size() - 1];
    const double c = (b.peak.hw * b.peak.hw - a.peak.hw * a.peak.hw) /
                     (b.omega * b.omega - a.omega * a.omega);
    const double w02 = a.peak.hw * a.peak.hw - c * a.omega * a.omega;
    if (w02 > 0.0) w0 = std::sqrt(w02);
  }
  if (acc.peak.hw > 5.0 * w0)
    throw std::runtime_error(
        "two_tone_spectroscopy: accepted peak is power-broadened beyond 5x "
        "the natural width");

  TwoToneResult out;
  out.f_q = acc.peak.f0;
  out.linewidth = 2.0 * acc.peak.hw;
  out.natural_linewidth = 2.0 * w0;
  out.snr = acc.snr;
  out.omega_drive = acc.omega;
  out.f_q_err = acc.peak.f0_err;
  out.f_hz = grid;
  out.response = acc.response;
  return out;
}

// --- three_tone_anharmonicity --------------------------------------------------

ThreeToneResult three_tone_anharmonicity(sim::Device& dev, double f01_hz,
                                         double f1_lo, double f1_hi,
                                         double f2_lo, double f2_hi, int n1,
                                         int n2, int shots,
                                         double omega_drive) {
  std::vector<double> f1(n1), f2(n2);
  for (int i = 0; i < n1; ++i) f1[i] = f1_lo + (f1_hi - f1_lo) * i / (n1 - 1);
  for (int j = 0; j < n2; ++j) f2[j] = f2_lo + (f2_hi - f2_lo) * j / (n2 - 1);
  const auto map = dev.scan_three_tone(f1, f2, omega_drive, shots);
  const double sigma = std::max(shot_sigma(shots), 1e-4);

  // Per f1 column, find the f2 ridge peak above the column baseline.
  std::vector<double> xs, ys;
  for (int i = 0; i < n1; ++i) {
    std::vector<double> col(n2);
    for (int j = 0; j < n2; ++j) col[j] = map[static_cast<std::size_t>(j) * n1 + i];
    const double base = median(col);
    if (base > 0.3) continue;  // saturated rows near the one-photon line
    int j_max = 1;
    for (int j = 1; j + 1 < n2; ++j)
      if (col[j] > col[j_max]) j_max = j;
    if (col[j_max] - base < 5.0 * sigma) continue;
    // Parabolic refinement.
    double fpk = f2[j_max];
    const double denom = col[j_max - 1] - 2.0 * col[j_max] + col[j_max + 1];
    if (std::abs(denom) > 1e-12)
      fpk += 0.5 * (col[j_max - 1] - col[j_max + 1]) / denom * (f2[1] - f2[0]);
    xs.push_back(f1[i]);
    ys.push_back(fpk);
  }
  if (xs.size() < 3)
    throw std::runtime_error("three_tone_anharmonicity: ridge not found");

  // Least-squares line f2 = a + b f1.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double nn = static_cast<double>(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ys[k];
  }
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  double sum_mean = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) sum_mean += xs[k] + ys[k];
  sum_mean /= nn;

  ThreeToneResult out;
  out.ridge_slope = slope;
  out.ridge_intercept = sum_mean;  // f_s1 + f_s2 on the ridge
  out.alpha = 2.0 * f01_hz - sum_mean;
  out.n_ridge_points = static_cast<int>(xs.size());
  return out;
}

// --- rabi_calibration ------------------------------------------------------------

RabiResult rabi_calibration(sim::Device& dev, const std::vector<double>& amps,
                            const PulseStyle& style, double frame_freq,
                            int shots, double drag) {
  if (amps.size() < 8)
    throw std::invalid_argument("rabi_calibration: need >= 8 amplitudes");
  RabiResult out;
  out.amps = amps;
  for (double a : amps) {
    sim::PulseSequence seq;
    seq.sample_period = style.sample_period;
    seq.frame_freq = frame_freq;
    seq.channels.push_back(drag_segment(a, drag, style));
    out.populations.push_back(dev.measure_population(seq, shots));
  }

  const double f0 = dominant_frequency(amps, out.populations);
  double mean = 0.0, mn = 1.0, mx = 0.0;
  for (double p : out.populations) {
    mean += p;
    mn = std::min(mn, p);
    mx = std::max(mx, p);
  }
  mean /= static_cast<double>(amps.size());

  Eigen::VectorXd x(amps.size()), y(amps.size());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    x(i) = amps[i];
    y(i) = out.populations[i];
  }
  Eigen::VectorXd p0(3);
  p0 << 0.5 * (mx - mn), f0 > 0.0 ? 1.0 / f0 : 2.0 * amps.back(), mean;
  const auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    return (p(2) - p(0) * (kTwoPi * xs.array() / p(1)).cos()).matrix().eval();
  };
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(3) << 0.0, 1e-12, 0.0).finished();
  opts.upper =
      (Eigen::VectorXd(3) << 1.0, 1e3 * amps.back(), 1.0).finished();
  const auto fit = numerics::least_squares_fit(model, x, y, p0, opts);

  out.contrast = 2.0 * fit.params(0);
  if (out.contrast < 3.0 * shot_sigma(shots))
    throw std::runtime_error("rabi_calibration: contrast below noise floor");
  out.period = fit.params(1);
  out.pi_amp = 0.5 * fit.params(1);
  out.pi2_amp = 0.25 * fit.params(1);
  out.pi_amp_err = 0.5 * fit.stderr_of(1);
  out.converged = fit.converged;
  return out;
}

// --- coherence experiments -------------------------------------------------------

namespace {

double run_sequence_population(sim::Device& dev, const GateAmps& amps,
                               const PulseStyle& style, double frame_freq,
                               const std::vector<std::pair<std::string, double>>&
                                   gates_at,  // (name, start)
                               const std::vector<double>& phases, double total,
                               int shots) {
  sim::PulseSequence seq;
  seq.sample_period = style.sample_period;
  seq.frame_freq = frame_freq;
  for (std::size_t k = 0; k < gates_at.size(); ++k) {
    auto seg_start = gates_at[k].second;
    GateAmps a = amps;
    sim::PulseSequence tmp;
    tmp.sample_period = style.sample_period;
    append_gate(tmp, gates_at[k].first, a, style, seg_start);
    if (!tmp.channels.empty()) {
      tmp.channels.back().phase += phases.empty() ? 0.0 : phases[k];
      seq.channels.push_back(tmp.channels.back());
    }
  }
  append_idle(seq, total);
  return dev.measure_population(seq, shots);
}

}  // namespace

CoherenceResult measure_t1(sim::Device& dev, const std::vector<double>& delays,
                           const GateAmps& amps, const PulseStyle& style,
                           double frame_freq, int shots) {
  CoherenceResult out;
  out.t = delays;
  for (double tau : delays) {
    out.p.push_back(run_sequence_population(dev, amps, style, frame_freq,
                                            {{"Xp", 0.0}}, {},
                                            style.duration + tau, shots));
  }
  Eigen::VectorXd x(delays.size()), y(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    x(i) = delays[i];
    y(i) = out.p[i];
  }
  Eigen::VectorXd p0(3);
  p0 << y(0) - y(y.size() - 1), delays.back() / 3.0, y(y.size() - 1);
  const auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    return (p(0) * (-xs.array() / p(1)).exp() + p(2)).matrix().eval();
  };
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(3) << 0.0, 1e-9, -0.5).finished();
  opts.upper = (Eigen::VectorXd(3) << 1.5, 10.0, 1.5).finished();
  const auto fit = numerics::least_squares_fit(model, x, y, p0, opts);
  out.time_constant = fit.params(1);
  out.time_err = fit.stderr_of(1);
  out.amplitude = fit.params(0);
  out.offset = fit.params(2);
  out.converged = fit.converged;
  out.grid_too_short = out.time_constant > 0.7 * delays.back();
  return out;
}

CoherenceResult measure_ramsey(sim::Device& dev,
                               const std::vector<double>& delays,
                               double artificial_detuning_hz,
                               const GateAmps& amps, const PulseStyle& style,
                               double frame_freq, int shots) {
  CoherenceResult out;
  out.t = delays;
  for (double tau : delays) {
    const double phase = kTwoPi * artificial_detuning_hz * tau;
    out.p.push_back(run_sequence_population(
        dev, amps, style, frame_freq,
        {{"X9", 0.0}, {"X9", style.duration + tau}}, {0.0, phase},
        2.0 * style.duration + tau, shots));
  }

  Eigen::VectorXd x(delays.size()), y(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    x(i) = delays[i];
    y(i) = out.p[i];
  }
  double mean = y.mean();
  const double f0 = dominant_frequency(delays, out.p);
  Eigen::VectorXd p0(7);
  // A, T2, n, f, phi, C, B
  p0 << 0.5 * (y.maxCoeff() - y.minCoeff()), delays.back() / 2.0, 1.0, f0, 0.0,
      0.0, mean;
  const auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    Eigen::ArrayXd env =
        p(0) * (-(xs.array() / p(1)).pow(p(2))).exp();
    return (env * ((kTwoPi * p(3) * xs.array() + p(4)).cos() + p(5)) + p(6))
        .matrix()
        .eval();
  };
  numerics::FitOptions opts;
  opts.lower =
      (Eigen::VectorXd(7) << 0.0, 1e-9, 0.5, 0.0, -4.0, -1.0, 0.0).finished();
  opts.upper = (Eigen::VectorXd(7) << 1.0, 10.0, 3.0,
                2.0 / (delays[1] - delays[0]), 4.0, 1.0, 1.0)
                   .finished();
  const auto fit = numerics::least_squares_fit(model, x, y, p0, opts);
  out.time_constant = fit.params(1);
  out.time_err = fit.stderr_of(1);
  out.exponent = fit.params(2);
  out.freq = fit.params(3);
  out.freq_err = fit.stderr_of(3);
  out.amplitude = fit.params(0);
  out.offset = fit.params(6);
  out.converged = fit.converged;
  out.grid_too_short = out.time_constant > 0.9 * delays.back();
  return out;
}

CoherenceResult measure_echo(sim::Device& dev,
                             const std::vector<double>& delays,
                             const GateAmps& amps, const PulseStyle& style,
                             double frame_freq, int shots) {
  CoherenceResult out;
  out.t = delays;
  const double d = style.duration;
  for (double tau : delays) {
    out.p.push_back(run_sequence_population(
        dev, amps, style, frame_freq,
        {{"X9", 0.0}, {"Xp", d + 0.5 * tau}, {"X9m", 2.0 * d + tau}}, {},
        3.0 * d + tau, shots));
  }
  Eigen::VectorXd x(delays.size()), y(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    x(i) = delays[i];
    y(i) = out.p[i];
  }
  Eigen::VectorXd p0(4);
  p0 << y(0) - y(y.size() - 1), delays.back() / 2.0, 1.0, y(y.size() - 1);
  const auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    return (p(0) * (-(xs.array() / p(1)).pow(p(2))).exp() + p(3))
        .matrix()
        .eval();
  };
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(4) << 0.0, 1e-9, 0.8, -0.5).finished();
  opts.upper = (Eigen::VectorXd(4) << 1.5, 10.0, 3.0, 1.5).finished();
  const auto fit = numerics::least_squares_fit(model, x, y, p0, opts);
  out.time_constant = fit.params(1);
  out.time_err = fit.stderr_of(1);
  out.exponent = fit.params(2);
  out.amplitude = fit.params(0);
  out.offset = fit.params(3);
  out.converged = fit.converged;
  out.grid_too_short = out.time_constant > 0.9 * delays.back();
  return out;
}

// --- repeated_ramsey_frequency_cal ----------------------------------------------

FreqCalResult repeated_ramsey_frequency_cal(sim::Device& dev,
                                            double f_q_initial, double t2_guess,
                                            const GateAmps& amps,
                                            const PulseStyle& style, int shots,
                                            double initial_error_bound) {
  FreqCalResult out;
  out.f_q = f_q_initial;
  double err_bound = initial_error_bound;
  const int n_pts = 41;
  double prev_correction = std::numeric_limits<double>::infinity();

  for (int round = 0; round < 5; ++round) {
    // Keep at least ~3 fringes inside the (T2-limited) window so the
    // oscillation fit stays well conditioned even when the bound is tiny.
    const double f_art = std::max(2.0 * err_bound, 1.5 / t2_guess);
    // Nyquist margin: (f_art + err) * dt <= 0.4 cycles per sample.
    const double dt_max = 0.4 / (f_art + err_bound);
    const double span = std::min((n_pts - 1) * dt_max, 2.0 * t2_guess);
    std::vector<double> delays(n_pts);
    for (int i = 0; i < n_pts; ++i) delays[i] = span * i / (n_pts - 1);

    auto fit = measure_ramsey(dev, delays, f_art, amps, style, out.f_q, shots);
    ++out.rounds;
    if (!fit.converged) {
      out.aliased = true;
      break;
    }
    // The fringe runs at |f_art + detuning|; with f_art > |detuning| the
    // detuning is (fitted f) - f_art.
    const double correction = fit.freq - f_art;
    if (std::abs(correction) > 2.0 * err_bound) {
      out.aliased = true;  // inconsistent with the assumed error bound
      break;
    }
    out.f_q += correction;
    out.round_corrections.push_back(correction);
    out.uncertainty = fit.freq_err;
    // Aliasing check across rounds: corrections must shrink, but only
    // statistically significant growth counts (late rounds sit at the
    // shot-noise floor where successive corrections fluctuate).
    if (round > 0 && std::abs(correction) > 2.0 * std::abs(prev_correction) &&
        std::abs(correction) > 5.0 * fit.freq_err) {
      out.aliased = true;
      break;
    }
    prev_correction = correction;
    err_bound = std::max(3.0 * fit.freq_err, std::abs(correction) * 0.5);
    err_bound = std::max(err_bound, 0.25 / span);  // resolution floor
    const double bound =
        1.0 / (kTwoPi * t2_guess *
               std::sqrt(static_cast<double>(n_pts) * shots));
    if (out.uncertainty < bound) break;
    // The last correction was statistically insignificant: converged.
    if (round > 0 && std::abs(correction) < 2.0 * fit.freq_err) break;
  }
  return out;
}

// --- allxy ----------------------------------------------------------------------

namespace {

struct AllxyTable {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::array<double, 21> ideal;
};

AllxyTable load_allxy_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("allxy: cannot open table " + path);
  nlohmann::json j;
  in >> j;
  AllxyTable t;
  const auto& pairs = j.at("pairs");
  if (pairs.size() != 21) throw std::runtime_error("allxy: table must have 21 pairs");
  for (std::size_t i = 0; i < 21; ++i) {
    t.pairs.emplace_back(pairs[i].at("first").get<std::string>(),
                         pairs[i].at("second").get<std::string>());
    t.ideal[i] = pairs[i].at("ideal").get<double>();
  }
  return t;
}

std::array<double, 21> allxy_trace(sim::Device& dev, const AllxyTable& table,
                                   const GateAmps& amps, const PulseStyle& style,
                                   double frame_freq, int shots) {
  std::array<double, 21> trace{};
  for (std::size_t i = 0; i < 21; ++i) {
    sim::PulseSequence seq;
    seq.sample_period = style.sample_period;
    seq.frame_freq = frame_freq;
    double t = 0.0;
    t = append_gate(seq, table.pairs[i].first, amps, style, t);
    t = append_gate(seq, table.pairs[i].second, amps, style, t);
    append_idle(seq, t);
    trace[i] = shots > 0 ? dev.measure_population(seq, shots)
                         : dev.ideal_population(seq);
  }
  return trace;
}

struct AllxyTemplates {
  std::array<double, 21> base;
  // Columns: detuning (per 100 kHz), amplitude (per 2%), drag (per 0.05),
  // contrast pull toward 0.5 (nuisance).
  Eigen::MatrixXd m;  // 21 x 4
};

const AllxyTemplates& allxy_templates(const AllxyTable& table,
                                      const PulseStyle& style) {
  static std::map<std::string, AllxyTemplates> cache;
  static std::mutex mu;
  char key[128];
  std::snprintf(key, sizeof(key), "%.3e_%.3e_%.3e", style.sigma,
                style.duration, style.sample_period);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  sim::GroundTruth gt;  // reference device, defaults
  sim::Device ref(gt, 12345);
  GateAmps amps;
  const double area = gaussian_area(style);
  amps.pi_amp = std::numbers::pi / (gt.drive_scale * area);
  amps.pi2_amp = 0.5 * amps.pi_amp;
  amps.drag = 0.0;
  // Calibrate the reference like a real device (DRAG zero crossing, then
  // pulse-train amplitude refinement, noise-free), so the baseline trace is
  // what a well-tuned device produces and residual 3-level effects cancel.
  amps.drag = drag_calibration(ref, amps, style, gt.omega_q01, 0).d_amp;
  amps.pi_amp = pulse_train_amplitude_cal(ref, amps, style, gt.omega_q01,
                                          {1, 2, 3, 5, 7, 9}, 0)
                    .pi_amp;
  amps.pi2_amp = 0.5 * amps.pi_amp;

  AllxyTemplates tpl;
  tpl.base = allxy_trace(ref, table, amps, style, gt.omega_q01, 0);

  tpl.m.resize(21, 4);
  const auto diff = [&](const GateAmps& a, double frame) {
    auto tr = allxy_trace(ref, table, a, style, frame, 0);
    Eigen::VectorXd d(21);
    for (int i = 0; i < 21; ++i) d(i) = tr[i] - tpl.base[i];
    return d;
  };
  tpl.m.col(0) = diff(amps, gt.omega_q01 - 100e3);  // frame low = qubit +100 kHz
  GateAmps amp_err = amps;
  amp_err.pi_amp *= 1.02;
  amp_err.pi2_amp *= 1.02;
  tpl.m.col(1) = diff(amp_err, gt.omega_q01);
  GateAmps drag_err = amps;
  drag_err.drag = 0.05;
  tpl.m.col(2) = diff(drag_err, gt.omega_q01);
  for (int i = 0; i < 21; ++i) tpl.m(i, 3) = 0.5 - table.ideal[i];

  return cache.emplace(key, std::move(tpl)).first->second;
}

}  // namespace

AllxyResult allxy(sim::Device& dev, const GateAmps& amps,
                  const PulseStyle& style, double frame_freq, int shots,
                  const std::string& allxy_table_path) {
  const AllxyTable table = load_allxy_table(allxy_table_path);
  const AllxyTemplates& tpl = allxy_templates(table, style);

  AllxyResult out;
  out.ideal = table.ideal;
  out.trace = allxy_trace(dev, table, amps, style, frame_freq, shots);

  // Deviation from the calibrated baseline, so residual multi-level effects
  // common to any well-tuned device cancel out of the error signal.
  Eigen::VectorXd d(21);
  for (int i = 0; i < 21; ++i) d(i) = out.trace[i] - tpl.base[i];

  const Eigen::MatrixXd mtm = tpl.m.transpose() * tpl.m;
  const Eigen::MatrixXd cov = mtm.inverse();
  const Eigen::VectorXd coef = mtm.ldlt().solve(tpl.m.transpose() * d);
  for (int k = 0; k < 3; ++k) out.coefficients[k] = coef(k);

  const double noise = std::max(shot_sigma(shots), 1e-4);
  const Eigen::VectorXd residual = d - tpl.m * coef;
  // Per-channel significance: z-score of the fitted coefficient plus a
  // minimum magnitude so statistically resolvable but negligible errors do
  // not raise a syndrome.
  std::array<double, 3> zscore{};
  for (int k = 0; k < 3; ++k)
    zscore[k] = std::abs(coef(k)) / (noise * std::sqrt(cov(k, k)));
  const int winner = static_cast<int>(
      std::max_element(zscore.begin(), zscore.end()) - zscore.begin());
  const double resid_thresh =
      std::max(3.0 * noise * std::sqrt(21.0 - 4.0), 0.02);
  const double winner_norm = std::abs(coef(winner)) * tpl.m.col(winner).norm();

  if (residual.norm() > resid_thresh &&
      residual.norm() > 2.0 * winner_norm) {
    out.syndrome = "distortion";
    out.severity = residual.norm();
  } else if (zscore[winner] > 4.0 && std::abs(coef(winner)) > 0.1) {
    out.syndrome =
        winner == 0 ? "detuning" : (winner == 1 ? "amplitude" : "drag");
    out.severity = std::abs(coef(winner));
  } else {
    out.syndrome = "none";
    out.severity = 0.0;
  }
  return out;
}

// --- drag_calibration ------------------------------------------------------------

DragCalResult drag_calibration(sim::Device& dev, const GateAmps& amps,
                               const PulseStyle& style, double frame_freq,
                               int shots, double d_lo, double d_hi,
                               int n_sweep) {
  DragCalResult out;
  for (int k = 0; k < n_sweep; ++k) {
    const double d = d_lo + (d_hi - d_lo) * k / (n_sweep - 1);
    GateAmps a = amps;
    a.drag = d;
    const double p1 = run_sequence_population(
        dev, a, style, frame_freq, {{"Yp", 0.0}, {"X9", style.duration}}, {},
        2.0 * style.duration, shots);
    const double p2 = run_sequence_population(
        dev, a, style, frame_freq, {{"Xp", 0.0}, {"Y9", style.duration}}, {},
        2.0 * style.duration, shots);
    out.sweep.push_back(d);
    out.diff.push_back(p1 - p2);
  }
  for (std::size_t k = 1; k < out.diff.size(); ++k) {
    if (out.diff[k - 1] == 0.0) {
      out.d_amp = out.sweep[k - 1];
      return out;
    }
    if (out.diff[k - 1] * out.diff[k] < 0.0) {
      const double frac = out.diff[k - 1] / (out.diff[k - 1] - out.diff[k]);
      out.d_amp = out.sweep[k - 1] + frac * (out.sweep[k] - out.sweep[k - 1]);
      return out;
    }
  }
  throw std::runtime_error("drag_calibration: no zero crossing in sweep range");
}

// --- pulse_train_amplitude_cal ---------------------------------------------------

namespace {

struct TrainRound {
  std::vector<int> n_used;
  std::vector<double> deviation;
  double epsilon;
};

TrainRound pulse_train_round(sim::Device& dev, const GateAmps& amps,
                             const PulseStyle& style, double frame_freq,
                             const std::vector<int>& n_list, int shots) {
  TrainRound round;
  for (int n : n_list) {
    sim::PulseSequence seq;
    seq.sample_period = style.sample_period;
    seq.frame_freq = frame_freq;
    double t = append_gate(seq, "X9", amps, style, 0.0);
    for (int k = 0; k < 2 * n; ++k) t = append_gate(seq, "Xp", amps, style, t);
    append_idle(seq, t);
    const double p = dev.measure_population(seq, shots);
    const double s = std::clamp(1.0 - 2.0 * p, -1.0, 1.0);
    if (std::abs(s) > 0.95) continue;  // rotation wrapped; N too large
    round.n_used.push_back(n);
    round.deviation.push_back(std::asin(s));
  }
  if (round.n_used.size() < 2)
    throw std::runtime_error(
        "pulse_train_amplitude_cal: decoherence or wrap-around dominates; "
        "reduce N");

  // Linear fit deviation = a + b N; deviation = -(2N + 1/2) pi epsilon.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double nn = static_cast<double>(round.n_used.size());
  for (std::size_t k = 0; k < round.n_used.size(); ++k) {
    sx += round.n_used[k];
    sy += round.deviation[k];
    sxx += static_cast<double>(round.n_used[k]) * round.n_used[k];
    sxy += round.n_used[k] * round.deviation[k];
  }
  const double b = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  round.epsilon = -b / kTwoPi;
  return round;
}

}  // namespace

PulseTrainResult pulse_train_amplitude_cal(sim::Device& dev,
                                           const GateAmps& amps,
                                           const PulseStyle& style,
                                           double frame_freq,
                                           const std::vector<int>& n_list,
                                           int shots, int max_rounds) {
  if (n_list.empty())
    throw std::invalid_argument("pulse_train_amplitude_cal: empty N list");
  PulseTrainResult out;
  GateAmps current = amps;
  // Once the first round has pulled the error below ~1%, longer trains stay
  // clear of sign wrap-around, so refinement rounds use a longer N list (and
  // more averaging) for a finer lever arm on the residual error.
  const std::vector<int> n_refine{2, 4, 6, 9, 12, 16};
  for (int r = 0; r < max_rounds; ++r) {
    const auto& ns = r == 0 ? n_list : n_refine;
    const int round_shots = r == 0 ? shots : (shots > 0 ? 2 * shots : 0);
    const auto round =
        pulse_train_round(dev, current, style, frame_freq, ns, round_shots);
    if (r == 0) {
      out.epsilon = round.epsilon;
      out.n_list = round.n_used;
      out.deviation = round.deviation;
    }
    current.pi_amp /= 1.0 + round.epsilon;
    current.pi2_amp /= 1.0 + round.epsilon;
    out.rounds = r + 1;
    if (std::abs(round.epsilon) < 1.5e-4) break;
  }
  out.pi_amp = current.pi_amp;
  return out;
}

// --- mixer_calibration -----------------------------------------------------------

namespace {

// One exact parabolic step for a quadratic-like 1-D objective.
double parabolic_step(const std::function<double(double)>& f, double x0,
                      double h) {
  const double fm = f(x0 - h), f0 = f(x0), fp = f(x0 + h);
  const double denom = fm - 2.0 * f0 + fp;
  if (denom <= 0.0 || !std::isfinite(denom)) return x0;
  return x0 + 0.5 * h * (fm - fp) / denom;
}

}  // namespace

MixerCalResult mixer_calibration(sim::Device& dev, int max_iterations) {
  MixerCalResult out;
  double h = 0.1;
  for (int it = 0; it < max_iterations; ++it) {
    const MixerCalResult prev = out;
    // LO leak: offsets.
    out.i_offset = parabolic_step(
        [&](double v) {
          return dev.mixer_probe(v, out.q_offset, out.imbalance, out.skew).p_lo;
        },
        out.i_offset, h);
    out.q_offset = parabolic_step(
        [&](double v) {
          return dev.mixer_probe(out.i_offset, v, out.imbalance, out.skew).p_lo;
        },
        out.q_offset, h);
    // Undesired sideband: imbalance and skew.
    out.imbalance = parabolic_step(
        [&](double v) {
          return dev.mixer_probe(out.i_offset, out.q_offset, v, out.skew).p_usb;
        },
        out.imbalance, h);
    out.skew = parabolic_step(
        [&](double v) {
          return dev.mixer_probe(out.i_offset, out.q_offset, out.imbalance, v)
              .p_usb;
        },
        out.skew, h);
    out.iterations = it + 1;
    const double change = std::max(
        {std::abs(out.i_offset - prev.i_offset),
         std::abs(out.q_offset - prev.q_offset),
         std::abs(out.imbalance - prev.imbalance), std::abs(out.skew - prev.skew)});
    h = std::max(h * 0.3, 1e-7);
    if (change < 1e-9 && it > 1) break;
  }
  const auto spec =
      dev.mixer_probe(out.i_offset, out.q_offset, out.imbalance, out.skew);
  out.lo_suppression_db =
      10.0 * std::log10(spec.p_lsb / std::max(spec.p_lo, 1e-30));
  out.sideband_suppression_db =
      10.0 * std::log10(spec.p_lsb / std::max(spec.p_usb, 1e-30));
  out.converged =
      out.lo_suppression_db >= 60.0 && out.sideband_suppression_db >= 60.0;
  if (!out.converged)
    throw std::runtime_error("mixer_calibration: failed to reach 60 dB "
                             "suppression within the iteration cap");
  return out;
}

// --- resonator_flux_sweep --------------------------------------------------------

FluxSweepResult resonator_flux_sweep(sim::Device& dev, double f_center_hz,
                                     double f_span_hz,
                                     const std::vector<double>& bias_a,
                                     double power_dbm, int n_points,
                                     int n_avg) {
  if (bias_a.size() < 3)
    throw std::invalid_argument("resonator_flux_sweep: need >= 3 bias points");
  std::vector<double> grid(n_points);
  for (int i = 0; i < n_points; ++i)
    grid[i] = f_center_hz +
              f_span_hz * (static_cast<double>(i) / (n_points - 1) - 0.5);

  FluxSweepResult out;
  for (double b : bias_a) {
    auto pts = dev.scan_s21_at_bias(grid, power_dbm, n_avg, b);
    std::vector<cplx> s(n_points);
    for (int i = 0; i < n_points; ++i) s[i] = pts[i].s21;
    const auto fit = fit_resonator(grid, s);
    out.bias.push_back(b);
    out.f_r.push_back(fit.f_r);
  }
  std::size_t i_max = 0;
  for (std::size_t i = 1; i < out.f_r.size(); ++i)
    if (out.f_r[i] > out.f_r[i_max]) i_max = i;
  out.sweet_spot_a = out.bias[i_max];
  if (i_max > 0 && i_max + 1 < out.f_r.size()) {
    const double denom =
        out.f_r[i_max - 1] - 2.0 * out.f_r[i_max] + out.f_r[i_max + 1];
    if (denom < 0.0)
      out.sweet_spot_a += 0.5 * (out.f_r[i_max - 1] - out.f_r[i_max + 1]) /
                          denom * (out.bias[1] - out.bias[0]);
  }
  return out;
}

}  // namespace cqed::calib
