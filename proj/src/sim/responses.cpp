#include "cqed/sim/responses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cqed/constants.hpp"
#include "cqed/numerics/linalg.hpp"

namespace cqed::sim {

using cplx = std::complex<double>;

double probe_photons(double probe_power_dbm, const GroundTruth& gt) {
  const double p_dev =
      dbm_to_watt(probe_power_dbm - gt.line.input_attenuation_db);
  const double kappa = gt.kappa();
  return 4.0 * gt.kappa_c * p_dev /
         (kHbar * kTwoPi * gt.omega_r_bare * kappa * kappa);
}

std::complex<double> s21_response(double f_hz, double probe_power_dbm,
                                  int qubit_state, const GroundTruth& gt) {
  const double kappa = gt.kappa();
  if (kappa <= 0.0) throw std::invalid_argument("s21_response: kappa <= 0");

  // Smooth crossover between the dressed (low power) and bare (punched-out)
  // resonance as the photon number crosses n_crit; logistic in log-photon
  // number with width 0.2.
  const double n = probe_photons(probe_power_dbm, gt);
  const double n_crit = gt.n_crit();
  double s = 0.0;
  if (n > 0.0 && n_crit > 0.0 && gt.g != 0.0)
    s = 1.0 / (1.0 + std::exp(-(std::log(n) - std::log(n_crit)) / 0.2));
  const double f_r =
      (1.0 - s) * gt.omega_r_dressed(qubit_state) + s * gt.omega_r_bare;

  const double omega = kTwoPi * f_hz;
  const double omega_r = kTwoPi * f_r;
  const cplx lorentz =
      (gt.kappa_c / kappa) / (1.0 + cplx(0.0, 2.0) * (omega - omega_r) / kappa);
  const double baseline = 1.0 + gt.line.alpha_slope * (f_hz - f_r) / f_r;
  const cplx phase = std::exp(cplx(0.0, gt.line.tau_v * omega + gt.line.phi0));
  return gt.line.amplitude * baseline * (1.0 - lorentz) * phase;
}

double qubit_spectroscopy_response(double f_s_hz, double omega_drive,
                                   const GroundTruth& gt) {
  if (omega_drive < 0.0)
    throw std::invalid_argument("qubit_spectroscopy_response: negative drive");
  if (omega_drive == 0.0) return gt.n_th;
  const double t2 = gt.t2_star();
  const double sat = omega_drive * omega_drive * gt.t1 * t2;
  const double delta = kTwoPi * (f_s_hz - gt.omega_q01);
  const double p =
      0.5 * sat / (1.0 + sat + delta * delta * t2 * t2);
  return gt.n_th + (1.0 - 2.0 * gt.n_th) * p;
}

TwoTransmonSpectrum two_transmon_spectrum(double f_i_hz, double f_j_hz,
                                          double alpha_i_hz, double alpha_j_hz,
                                          double j1_hz) {
  if (std::abs(f_i_hz - f_j_hz) <= 2.0 * std::abs(j1_hz))
    throw std::invalid_argument("two_transmon_spectrum: not dispersive");

  // 3x3 per transmon; Duffing ladder f*n - (alpha/2) n (n-1) plus exchange.
  const int d = 3;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d * d, d * d);
  auto idx = [d](int ni, int nj) { return ni * d + nj; };
  auto ladder = [](double f, double a, int n) {
    return f * n - 0.5 * a * n * (n - 1);
  };
  for (int ni = 0; ni < d; ++ni)
    for (int nj = 0; nj < d; ++nj)
      h(idx(ni, nj), idx(ni, nj)) =
          ladder(f_i_hz, alpha_i_hz, ni) + ladder(f_j_hz, alpha_j_hz, nj);
  for (int ni = 0; ni + 1 < d; ++ni)
    for (int nj = 1; nj < d; ++nj) {
      const double amp =
          j1_hz * std::sqrt(double(ni + 1)) * std::sqrt(double(nj));
      h(idx(ni + 1, nj - 1), idx(ni, nj)) += amp;
      h(idx(ni, nj), idx(ni + 1, nj - 1)) += amp;
    }

  const auto eg = numerics::eigh(h);
  // Identify dressed levels by maximum overlap with the bare product states.
  auto dressed_energy = [&](int ni, int nj) {
    int best = 0;
    double best_w = -1.0;
    for (int k = 0; k < d * d; ++k) {
      const double w = std::norm(eg.eigenvectors(idx(ni, nj), k));
      if (w > best_w) {
        best_w = w;
        best = k;
      }
    }
    return eg.eigenvalues(best);
  };
  const double e00 = dressed_energy(0, 0);
  TwoTransmonSpectrum out;
  out.e10 = dressed_energy(1, 0) - e00;
  out.e01 = dressed_energy(0, 1) - e00;
  out.e11 = dressed_energy(1, 1) - e00;
  out.zeta_exact = out.e11 - out.e01 - out.e10;

  const double j2 = std::sqrt(2.0) * j1_hz;
  const double w11 = f_i_hz + f_j_hz;
  const double w20 = 2.0 * f_i_hz - alpha_i_hz;
  const double w02 = 2.0 * f_j_hz - alpha_j_hz;
  out.zeta_approx = -j2 * j2 * (1.0 / (w20 - w11) + 1.0 / (w02 - w11));
  return out;
}

MixerSpectrum mixer_output_spectrum(double i_offset, double q_offset,
                                    double imbalance, double skew,
                                    double f_lo_hz, double f_if_hz,
                                    const MixerModel& hidden) {
  (void)f_lo_hz;
  (void)f_if_hz;  // powers are frequency-independent in this model
  MixerSpectrum m;
  const cplx offsets(i_offset, q_offset);
  m.p_lo = std::norm(offsets - hidden.lo_leak);
  const double eff_imbalance = (1.0 + hidden.imbalance) * (1.0 + imbalance) - 1.0;
  const double eff_skew = hidden.skew + skew;
  m.p_usb =
      std::norm((1.0 + eff_imbalance) * std::exp(cplx(0.0, eff_skew)) - 1.0) /
      4.0;
  m.p_lsb = 1.0;
  return m;
}

double qubit_freq_at_bias(double bias_a, const GroundTruth& gt) {
  // SQUID modulation: f_q + EC follows sqrt(|cos|) of the reduced flux.
  const double phi =
      std::numbers::pi * (bias_a - gt.sweet_spot_a) / gt.flux_period_a;
  const double plasma = gt.omega_q01 + gt.anharmonicity;  // sqrt(8 EJ EC)
  return plasma * std::sqrt(std::abs(std::cos(phi))) - gt.anharmonicity;
}

double resonator_freq_at_bias(double bias_a, int qubit_state,
                              const GroundTruth& gt) {
  GroundTruth at = gt;
  at.omega_q01 = qubit_freq_at_bias(bias_a, gt);
  if (at.delta() == 0.0) return gt.omega_r_bare;
  return at.omega_r_dressed(qubit_state);
}

}  // namespace cqed::sim
