#include "cqed/circuit.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cqed/constants.hpp"

namespace cqed::circuit {

Oscillator oscillator_params(double inductance, double capacitance) {
  if (inductance <= 0.0 || capacitance <= 0.0)
    throw std::invalid_argument("oscillator_params: L and C must be positive");
  Oscillator o;
  o.inductance = inductance;
  o.capacitance = capacitance;
  o.omega = 1.0 / std::sqrt(inductance * capacitance);
  o.z0 = std::sqrt(inductance / capacitance);
  o.phi_zpf = std::sqrt(o.z0 / (2.0 * kResistanceQuantum));
  o.n_zpf = std::sqrt(kResistanceQuantum / (2.0 * o.z0));
  return o;
}

TransmonParams transmon_spectrum(double ej_hz, double ec_hz) {
  if (ej_hz <= 0.0 || ec_hz <= 0.0)
    throw std::invalid_argument("transmon_spectrum: EJ and EC must be positive");
  TransmonParams t;
  t.ej = ej_hz;
  t.ec = ec_hz;
  t.omega_t = kTwoPi * (std::sqrt(8.0 * ej_hz * ec_hz) - ec_hz);
  t.anharmonicity = ec_hz;
  t.phi_zpf = std::pow(2.0 * ec_hz / ej_hz, 0.25);
  t.in_transmon_regime = (ej_hz / ec_hz >= 20.0);
  return t;
}

double squid_effective_ej(double ej_sum_hz, double phi_ex_rad) {
  if (ej_sum_hz <= 0.0)
    throw std::invalid_argument("squid_effective_ej: EJ_sum must be positive");
  return ej_sum_hz * std::abs(std::cos(phi_ex_rad / 2.0));
}

DispersiveCoupling dispersive_params(double g_hz, double omega_t_hz,
                                     double omega_r_hz, double ec_hz,
                                     double kappa) {
  const double delta = omega_t_hz - omega_r_hz;
  if (delta == 0.0)
    throw std::invalid_argument("dispersive_params: zero detuning");
  DispersiveCoupling d;
  d.g = g_hz;
  d.delta = delta;
  d.kappa = kappa;
  d.theta = 0.5 * std::atan2(2.0 * g_hz, delta);
  const double r = g_hz / delta;
  d.lamb_shift = g_hz * r;
  d.purcell_rate = 2.0 * r * r * kappa;
  d.chi = 2.0 * ec_hz * r * r;
  d.kerr = ec_hz * r * r * r * r;
  d.dispersive_valid = (std::abs(r) <= 0.2);
  return d;
}

double icrn_product(double delta_sc_ev, double temperature_k) {
  const double delta_j = delta_sc_ev * kElectronCharge;  // J
  const double zero_t = std::numbers::pi * delta_j / (2.0 * kElectronCharge);  // V
  if (temperature_k <= 0.0) return zero_t;
  return zero_t * std::tanh(delta_j / (2.0 * kBoltzmann * temperature_k));
}

JunctionParams junction_from_resistance(double r_n_ohm, double delta_sc_ev,
                                        double aging_factor) {
  if (r_n_ohm <= 0.0 || delta_sc_ev <= 0.0 || aging_factor < 1.0)
    throw std::invalid_argument("junction_from_resistance: invalid input");
  JunctionParams j;
  j.r_n = r_n_ohm;
  j.delta_sc = delta_sc_ev;
  j.aging_factor = aging_factor;
  const double rp = aging_factor * r_n_ohm;
  j.ic = icrn_product(delta_sc_ev, 0.0) / rp;
  j.lj = kReducedFluxQuantum / j.ic;
  j.ej = kReducedFluxQuantum * j.ic / kPlanck;  // Hz
  return j;
}

std::complex<double> dressed_resonator_eigenvalue(double g_hz, double omega_t_hz,
                                                  double omega_r_hz,
                                                  double kappa) {
  using cplx = std::complex<double>;
  Eigen::Matrix2cd m;
  m << cplx(omega_r_hz, -kappa / (2.0 * kTwoPi)), cplx(g_hz, 0.0),
      cplx(g_hz, 0.0), cplx(omega_t_hz, 0.0);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(m);
  // Pick the branch closest to the bare resonator frequency.
  const cplx e0 = es.eigenvalues()(0), e1 = es.eigenvalues()(1);
  return std::abs(e0.real() - omega_r_hz) < std::abs(e1.real() - omega_r_hz)
             ? e0
             : e1;
}

}  // namespace cqed::circuit
