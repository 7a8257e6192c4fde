#include "cqed/sim/ground_truth.hpp"

#include <json.hpp>

namespace cqed::sim {

using nlohmann::ordered_json;

GroundTruth ground_truth_from_json_text(const std::string& text) {
  const auto j = ordered_json::parse(text);
  GroundTruth gt;
  const auto& d = j.contains("ground_truth") ? j.at("ground_truth") : j;
  auto get = [&](const char* key, double fallback) {
    return d.contains(key) ? d.at(key).get<double>() : fallback;
  };
  gt.omega_q01 = get("omega_q01_hz", gt.omega_q01);
  gt.anharmonicity = get("anharmonicity_hz", gt.anharmonicity);
  gt.t1 = get("t1_s", gt.t1);
  gt.tphi = get("tphi_s", gt.tphi);
  gt.omega_r_bare = get("omega_r_bare_hz", gt.omega_r_bare);
  gt.g = get("g_hz", gt.g);
  gt.kappa_c = get("kappa_c", gt.kappa_c);
  gt.kappa_i = get("kappa_i", gt.kappa_i);
  gt.eta = get("eta", gt.eta);
  gt.n_th = get("n_th", gt.n_th);
  gt.drive_scale = get("drive_scale", gt.drive_scale);
  gt.flux_period_a = get("flux_period_a", gt.flux_period_a);
  gt.sweet_spot_a = get("sweet_spot_a", gt.sweet_spot_a);
  gt.zeta = get("zeta_hz", gt.zeta);
  if (d.contains("mixer")) {
    const auto& m = d.at("mixer");
    gt.mixer.lo_leak = {m.value("lo_leak_re", 0.0), m.value("lo_leak_im", 0.0)};
    gt.mixer.imbalance = m.value("imbalance", 0.0);
    gt.mixer.skew = m.value("skew_rad", 0.0);
  }
  if (d.contains("line")) {
    const auto& l = d.at("line");
    gt.line.amplitude = l.value("amplitude", 1.0);
    gt.line.alpha_slope = l.value("alpha_slope", 0.0);
    gt.line.tau_v = l.value("tau_v_s", 0.0);
    gt.line.phi0 = l.value("phi0_rad", 0.0);
    gt.line.input_attenuation_db = l.value("input_attenuation_db", 60.0);
  }
  gt.validate();
  return gt;
}

std::string ground_truth_to_json_text(const GroundTruth& gt) {
  ordered_json d;
  d["omega_q01_hz"] = gt.omega_q01;
  d["anharmonicity_hz"] = gt.anharmonicity;
  d["t1_s"] = gt.t1;
  d["tphi_s"] = gt.tphi;
  d["omega_r_bare_hz"] = gt.omega_r_bare;
  d["g_hz"] = gt.g;
  d["kappa_c"] = gt.kappa_c;
  d["kappa_i"] = gt.kappa_i;
  d["eta"] = gt.eta;
  d["n_th"] = gt.n_th;
  d["drive_scale"] = gt.drive_scale;
  d["flux_period_a"] = gt.flux_period_a;
  d["sweet_spot_a"] = gt.sweet_spot_a;
  d["zeta_hz"] = gt.zeta;
  d["mixer"] = {{"lo_leak_re", gt.mixer.lo_leak.real()},
                {"lo_leak_im", gt.mixer.lo_leak.imag()},
                {"imbalance", gt.mixer.imbalance},
                {"skew_rad", gt.mixer.skew}};
  d["line"] = {{"amplitude", gt.line.amplitude},
               {"alpha_slope", gt.line.alpha_slope},
               {"tau_v_s", gt.line.tau_v},
               {"phi0_rad", gt.line.phi0},
               {"input_attenuation_db", gt.line.input_attenuation_db}};
  ordered_json j;
  j["ground_truth"] = d;
  return j.dump(2);
}

}  // namespace cqed::sim
