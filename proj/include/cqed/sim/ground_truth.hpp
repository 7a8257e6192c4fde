#pragma once

// Hidden device parameters for the virtual device. Calibration code never
// reads these directly; it only sees simulated measurement outcomes.

#include <complex>
#include <stdexcept>
#include <string>

namespace cqed::sim {

struct MixerModel {
  std::complex<double> lo_leak{0.0, 0.0};  // complex offset-plane location
  double imbalance = 0.0;                  // amplitude imbalance
  double skew = 0.0;                       // rad, IQ phase skew
};

// Measurement-line model for the hanger response: overall transmission A,
// linear baseline slope, electrical delay, phase offset, and the input-line
// attenuation used to convert probe power into intracavity photons.
struct LineParams {
  double amplitude = 1.0;
  double alpha_slope = 0.0;
  double tau_v = 0.0;              // s, electrical delay
  double phi0 = 0.0;               // rad
  double input_attenuation_db = 60.0;
};

struct GroundTruth {
  double omega_q01 = 5.0e9;        // Hz, qubit 0-1 transition
  double anharmonicity = 250e6;    // Hz (= EC)
  double t1 = 50e-6;               // s
  double tphi = 70e-6;             // s, pure dephasing
  double omega_r_bare = 7.0e9;     // Hz
  double g = 100e6;                // Hz
  double kappa_c = 2.0 * 3.141592653589793 * 1e6;   // 1/s
  double kappa_i = 2.0 * 3.141592653589793 * 0.1e6; // 1/s
  double eta = 1.0;                // readout efficiency, (0, 1]
  double n_th = 0.0;               // residual qubit thermal population
  double drive_scale = 2.0 * 3.141592653589793 * 50e6;  // rad/s per unit amplitude
  double flux_period_a = 1e-3;     // A per flux quantum (tunable devices)
  double sweet_spot_a = 0.0;       // A
  double zeta = 0.0;               // Hz, residual ZZ to the neighbor qubit
  MixerModel mixer;
  LineParams line;

  double kappa() const { return kappa_c + kappa_i; }
  double delta() const { return omega_q01 - omega_r_bare; }   // Hz
  double chi() const {                                        // Hz
    const double r = g / delta();
    return 2.0 * anharmonicity * r * r;
  }
  double lamb_shift() const { return g * g / delta(); }       // Hz
  double n_crit() const {
    return delta() * delta() / (4.0 * g * g);
  }
  // Dressed resonator frequency for a given qubit state (Hz).
  double omega_r_dressed(int state) const {
    return omega_r_bare - lamb_shift() - static_cast<double>(state) * chi();
  }
  double t2_star() const {
    return 1.0 / (1.0 / (2.0 * t1) + 1.0 / tphi);
  }

  void validate() const {
    if (t1 <= 0.0 || tphi <= 0.0)
      throw std::invalid_argument("GroundTruth: T1 and Tphi must be positive");
    if (kappa() <= 0.0) throw std::invalid_argument("GroundTruth: kappa <= 0");
    if (eta <= 0.0 || eta > 1.0)
      throw std::invalid_argument("GroundTruth: eta outside (0, 1]");
    if (delta() == 0.0)
      throw std::invalid_argument("GroundTruth: qubit resonant with resonator");
  }
};

GroundTruth ground_truth_from_json_text(const std::string& text);
std::string ground_truth_to_json_text(const GroundTruth& gt);

}  // namespace cqed::sim
