#pragma once

// Physical constants (SI, CODATA 2018) and unit helpers.
//
// Convention used throughout the library: energies and frequencies are plain
// frequencies in Hz (E/h) unless a name says otherwise; decay rates (kappa,
// Gamma) are angular rates in 1/s. Conversions happen at simulator
// boundaries via the helpers below.

#include <cmath>

namespace cqed {

inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kElectronCharge = 1.602176634e-19;  // C

// Flux quanta: Phi0 = h/2e, reduced phi0 = hbar/2e.
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElectronCharge);
inline constexpr double kReducedFluxQuantum = kHbar / (2.0 * kElectronCharge);

// Reduced resistance quantum for superconductors, hbar/(2e)^2 ~= 1.027 kOhm.
inline constexpr double kResistanceQuantum =
    kHbar / (4.0 * kElectronCharge * kElectronCharge);

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline constexpr double hz_to_rad(double f) { return kTwoPi * f; }
inline constexpr double rad_to_hz(double w) { return w / kTwoPi; }

inline double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_power_to_db(double p) { return 10.0 * std::log10(p); }
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

}  // namespace cqed
