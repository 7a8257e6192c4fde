#pragma once

// Closed-form circuit parameter calculators: LC oscillators, transmons,
// SQUIDs, junctions from room-temperature resistance, and the dispersive
// coupling quantities (chi, Kerr, Lamb shift, Purcell rate).
//
// Unit convention: energies and couplings are stored in Hz (E/h); decay
// rates (kappa, Purcell) are angular, 1/s. Conversions to rad/s happen only
// at simulator boundaries.

#include <complex>

namespace cqed::circuit {

struct Oscillator {
  double inductance;    // H
  double capacitance;   // F
  double omega;         // rad/s
  double z0;            // ohm
  double phi_zpf;       // dimensionless
  double n_zpf;         // dimensionless
};

struct TransmonParams {
  double ej;            // Hz
  double ec;            // Hz
  double omega_t;       // rad/s
  double anharmonicity; // Hz (= EC)
  double phi_zpf;       // (2 EC / EJ)^{1/4} junction-phase spread
  bool in_transmon_regime;  // EJ/EC >= 20
};

struct DispersiveCoupling {
  double g;             // Hz
  double delta;         // Hz, omega_T - omega_R
  double theta;         // rad, mixing angle
  double lamb_shift;    // Hz
  double purcell_rate;  // 1/s
  double chi;           // Hz
  double kerr;          // Hz, qubit self-Kerr correction
  double kappa;         // 1/s
  bool dispersive_valid;  // |g/Delta| <= 0.2
};

struct JunctionParams {
  double r_n;           // ohm, as measured at room temperature
  double delta_sc;      // eV
  double aging_factor;  // R'_n / R_n
  double ej;            // Hz
  double lj;            // H
  double ic;            // A
};

Oscillator oscillator_params(double inductance, double capacitance);
TransmonParams transmon_spectrum(double ej_hz, double ec_hz);
double squid_effective_ej(double ej_sum_hz, double phi_ex_rad);
DispersiveCoupling dispersive_params(double g_hz, double omega_t_hz,
                                     double omega_r_hz, double ec_hz,
                                     double kappa);
JunctionParams junction_from_resistance(double r_n_ohm, double delta_sc_ev,
                                        double aging_factor);

// Finite-temperature critical-current * resistance product (V); reduces to
// the zero-temperature value as T -> 0.
double icrn_product(double delta_sc_ev, double temperature_k);

// Complex 2x2 dressed-mode matrix [[w_R - i kappa/2, g], [g, w_T]] used to
// cross-check the perturbative Lamb shift and Purcell rate. Entries in Hz
// with kappa converted to Hz for consistency.
std::complex<double> dressed_resonator_eigenvalue(double g_hz, double omega_t_hz,
                                                  double omega_r_hz,
                                                  double kappa);

}  // namespace cqed::circuit
