#pragma once

// Design-stage calculators: cryogenic attenuation chains and thermal photon
// occupation, amplifier-cascade noise, dielectric/inductive loss budgets,
// wiring-induced T1 limits, and the drive-power budget for a target
// rotation angle.

#include <functional>
#include <string>
#include <vector>

namespace cqed::budget {

struct ChainStage {
  double temperature_k;    // physical temperature of the stage
  double attenuation_db;   // >= 0
};

struct AmpStage {
  double gain_db;
  double noise_temperature_k;
};

struct LossContribution {
  std::string label;
  double participation;            // in [0, 1]
  double loss_tangent_or_inv_q;    // tan(delta) or 1/Q_s
};

struct ChainResult {
  double n_device;
  std::vector<double> per_stage;  // occupation after each stage
};

struct SnrResult {
  double snr_out_over_in;   // <= 1; expressed as SNR_out / SNR_in
  double snr_in_over_out;   // >= 1, the degradation factor 1 + T_eff/T_in
  double effective_tn_k;
  bool diverged;            // T_in = 0 with nonzero noise temperature
};

struct LossBudget {
  double gamma;                    // 1/s
  std::vector<double> breakdown;   // per-contribution rates
  double t1_limit;                 // s
};

struct WiringLimits {
  double gamma_drive;     // 1/s, capacitive drive-line decay
  double gamma_flux;      // 1/s, flux-bias-line decay
  double t1_drive;        // s
  double t1_flux;         // s
};

struct RabiBudget {
  double v0_at_device;           // V, peak envelope amplitude at the qubit port
  double power_at_device_dbm;
  double v_peak_at_fridge_input; // V, after undoing the line attenuation
  double power_at_fridge_input_dbm;
};

double thermal_occupation(double f_hz, double temperature_k);

// Propagates n_in through the attenuator chain, ordered from room
// temperature toward the device: n <- n/A + (1 - 1/A) n_bar(f, T_stage).
ChainResult chain_occupation(const std::vector<ChainStage>& stages, double f_hz,
                             double n_in);

double thermal_dephasing(double n_th, double kappa, double chi_rad);

SnrResult amplifier_chain_snr(double p_signal_w, double t_in_k, double bandwidth_hz,
                              const std::vector<AmpStage>& stages);

LossBudget dielectric_loss_budget(const std::vector<LossContribution>& contribs,
                                  double omega, double eta_n = 1.0);

double surface_participation_estimate(double d_m, double t_m, double eps_bulk,
                                      double eps_surface);

double inductive_loss_budget(const std::vector<LossContribution>& contribs,
                             double omega, double eta_phi = 1.0);

WiringLimits wiring_t1_limits(double omega_q, double c_sigma, double z0,
                              double drive_cc, double flux_cc, double flux_lc);

double env_impedance_decay(double re_z_ohm, double c_sigma);

// Solves the pulse-area relation Theta = Omega * V0 * integral(s dt) for the
// required drive amplitude, where Omega = (Cc/C_Sigma) * q_zpf-scaled
// coupling. The absolute rad/s-per-volt conversion carries a fixed
// calibration constant (see .cpp) documented where it is defined.
RabiBudget rabi_drive_budget(double cc, double c_sigma, double z_ohm,
                             double target_angle_rad,
                             const std::vector<double>& envelope,
                             double sample_period_s,
                             double line_attenuation_db);

}  // namespace cqed::budget
