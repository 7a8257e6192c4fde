// cqedtwin: command-line front end for the virtual-device toolkit.
//
// Commands:
//   budget   <config.json>               design-stage budget tables
//   simulate <device.json> <experiment>  deterministic synthetic dataset
//   fit      <dataset.csv> <model>       nonlinear fit of a dataset
//   tuneup   <device.json> <graph.json>  run the calibration graph
//
// Exit codes: 0 ok, 1 calibration failure, 2 input error. All outputs are
// byte-identical for identical inputs and --seed, and embed the tool
// version plus an FNV-1a hash of the input files.

#include <CLI11.hpp>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqed/budget.hpp"
#include "cqed/calib/experiments.hpp"
#include "cqed/calib/graph.hpp"
#include "cqed/calib/pulses.hpp"
#include "cqed/calib/report.hpp"
#include "cqed/numerics/fit.hpp"
#include "cqed/sim/device.hpp"
#include "cqed/sim/ground_truth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using cqed::calib::csv_text;
using cqed::calib::fnv1a64;
using cqed::calib::hash_hex;
using cqed::calib::kToolVersion;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  out << text;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = a + (b - a) * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.0);
  return v;
}

double require_num(const ordered_json& j, const char* key,
                   const std::string& where) {
  if (!j.contains(key))
    throw InputError(where + ": missing required key '" + key + "'");
  if (!j.at(key).is_number())
    throw InputError(where + ": key '" + key + "' must be a number");
  return j.at(key).get<double>();
}

// --- budget ----------------------------------------------------------------

int cmd_budget(const std::string& config_path, const fs::path& out_dir,
               const std::string& format) {
  const std::string text = read_file(config_path);
  ordered_json cfg;
  try {
    cfg = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw InputError(std::string("budget: ") + e.what());
  }
  const std::string input_hash = hash_hex(fnv1a64(text));

  ordered_json report;
  report["tool_version"] = kToolVersion;
  report["input_hash"] = input_hash;

  // Thermal occupation through the attenuation chain.
  std::vector<std::vector<double>> chain_rows;
  if (cfg.contains("chain")) {
    const double f = require_num(cfg, "frequency_hz", "budget config");
    const double t_source = cfg.value("source_temperature_k", 300.0);
    std::vector<cqed::budget::ChainStage> stages;
    for (const auto& s : cfg.at("chain"))
      stages.push_back({require_num(s, "temperature_k", "budget chain stage"),
                        require_num(s, "attenuation_db", "budget chain stage")});
    const double n_in = cqed::budget::thermal_occupation(f, t_source);
    const auto res = cqed::budget::chain_occupation(stages, f, n_in);
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < stages.size(); ++i) {
      rows.push_back({{"temperature_k", stages[i].temperature_k},
                      {"attenuation_db", stages[i].attenuation_db},
                      {"occupation_after", res.per_stage[i]}});
      chain_rows.push_back({static_cast<double>(i), stages[i].temperature_k,
                            stages[i].attenuation_db, res.per_stage[i]});
    }
    report["chain_occupation"] = {{"frequency_hz", f},
                                  {"n_input", n_in},
                                  {"n_device", res.n_device},
                                  {"stages", rows}};
    std::cout << "n_device = " << res.n_device << "\n";
  }

  // Wiring-limited T1 budget.
  std::vector<std::vector<double>> t1_rows;
  std::vector<std::string> t1_labels;
  if (cfg.contains("wiring")) {
    const auto& w = cfg.at("wiring");
    const auto lim = cqed::budget::wiring_t1_limits(
        kTwoPi * require_num(w, "qubit_frequency_hz", "budget wiring"),
        require_num(w, "c_sigma_f", "budget wiring"),
        w.value("z0_ohm", 50.0), require_num(w, "drive_cc_f", "budget wiring"),
        require_num(w, "flux_cc_f", "budget wiring"),
        require_num(w, "flux_lc_h", "budget wiring"));
    report["t1_limits"] = {
        {"drive_line", {{"gamma", lim.gamma_drive}, {"t1_limit_s", lim.t1_drive}}},
        {"flux_line", {{"gamma", lim.gamma_flux}, {"t1_limit_s", lim.t1_flux}}}};
    t1_labels = {"drive_line", "flux_line"};
    t1_rows = {{lim.gamma_drive, lim.t1_drive}, {lim.gamma_flux, lim.t1_flux}};
    std::cout << "t1_drive_limit = " << lim.t1_drive * 1e6 << " us\n"
              << "t1_flux_limit = " << lim.t1_flux * 1e6 << " us\n";
  }

  // Amplifier-cascade SNR degradation.
  if (cfg.contains("amplifiers")) {
    const auto& a = cfg.at("amplifiers");
    std::vector<cqed::budget::AmpStage> stages;
    for (const auto& s : a.at("stages"))
      stages.push_back(
          {require_num(s, "gain_db", "budget amplifier stage"),
           require_num(s, "noise_temperature_k", "budget amplifier stage")});
    const auto snr = cqed::budget::amplifier_chain_snr(
        require_num(a, "p_signal_w", "budget amplifiers"),
        require_num(a, "t_in_k", "budget amplifiers"),
        require_num(a, "bandwidth_hz", "budget amplifiers"), stages);
    report["snr_cascade"] = {{"snr_out_over_in", snr.snr_out_over_in},
                             {"snr_in_over_out", snr.snr_in_over_out},
                             {"effective_tn_k", snr.effective_tn_k},
                             {"diverged", snr.diverged}};
  }

  // Drive-power budget for a target rotation angle.
  if (cfg.contains("rabi_drive")) {
    const auto& r = cfg.at("rabi_drive");
    const double sigma = require_num(r, "sigma_s", "budget rabi_drive");
    const double duration = require_num(r, "duration_s", "budget rabi_drive");
    const double dt = require_num(r, "sample_period_s", "budget rabi_drive");
    std::vector<double> env;
    const double mu = duration / 2.0;
    for (double t = 0.0; t <= duration; t += dt)
      env.push_back(std::exp(-0.5 * (t - mu) * (t - mu) / (sigma * sigma)));
    const auto rb = cqed::budget::rabi_drive_budget(
        require_num(r, "cc_f", "budget rabi_drive"),
        require_num(r, "c_sigma_f", "budget rabi_drive"),
        r.value("z_ohm", 50.0),
        r.value("target_angle_rad", std::numbers::pi), env, dt,
        require_num(r, "line_attenuation_db", "budget rabi_drive"));
    report["rabi_drive"] = {
        {"v0_at_device", rb.v0_at_device},
        {"power_at_device_dbm", rb.power_at_device_dbm},
        {"v_peak_at_fridge_input", rb.v_peak_at_fridge_input},
        {"power_at_fridge_input_dbm", rb.power_at_fridge_input_dbm}};
    std::cout << "power_at_device = " << rb.power_at_device_dbm << " dBm\n";
  }

  if (format == "csv") {
    if (!chain_rows.empty())
      write_file(out_dir / "budget_chain.csv",
                 csv_text({{"tool_version", kToolVersion},
                           {"input_hash", input_hash}},
                          {"stage", "temperature_k", "attenuation_db",
                           "occupation_after"},
                          chain_rows));
    if (!t1_rows.empty())
      write_file(out_dir / "budget_t1_limits.csv",
                 csv_text({{"tool_version", kToolVersion},
                           {"input_hash", input_hash},
                           {"rows", t1_labels[0] + ";" + t1_labels[1]}},
                          {"gamma_per_s", "t1_limit_s"}, t1_rows));
  }
  write_file(out_dir / "budget_report.json", report.dump(2) + "\n");
  return 0;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& device_path, const std::string& experiment,
                 const fs::path& out_dir, const std::string& format,
                 std::optional<std::uint64_t> seed_override, int shots) {
  const std::string text = read_file(device_path);
  cqed::sim::GroundTruth gt;
  std::uint64_t seed = 1;
  try {
    gt = cqed::sim::ground_truth_from_json_text(text);
    seed = ordered_json::parse(text).value("seed", std::uint64_t{1});
  } catch (const std::exception& e) {
    throw InputError(std::string("simulate: bad device file: ") + e.what());
  }
  if (seed_override) seed = *seed_override;
  cqed::sim::Device dev(gt, seed);

  cqed::calib::PulseStyle style;
  cqed::calib::GateAmps amps;
  amps.pi_amp = std::numbers::pi /
                (gt.drive_scale * cqed::calib::gaussian_area(style));
  amps.pi2_amp = amps.pi_amp / 2.0;

  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  if (experiment == "s21") {
    columns = {"f_hz", "s21_re", "s21_im"};
    if (shots > 0) {
      const double span = std::max(10.0 * gt.kappa() / kTwoPi, 10e6);
      const auto f = linspace(gt.omega_r_dressed(0) - span / 2.0,
                              gt.omega_r_dressed(0) + span / 2.0, 401);
      for (const auto& pt : dev.scan_s21(f, -90.0, shots))
        rows.push_back({pt.f_hz, pt.s21.real(), pt.s21.imag()});
    }
  } else if (experiment == "two_tone") {
    columns = {"f_hz", "p_excited"};
    if (shots > 0) {
      const auto f = linspace(gt.omega_q01 - 5e7, gt.omega_q01 + 5e7, 401);
      const auto p = dev.scan_two_tone(f, 4e6, shots);
      for (std::size_t i = 0; i < f.size(); ++i) rows.push_back({f[i], p[i]});
    }
  } else if (experiment == "rabi") {
    columns = {"amplitude", "p_excited"};
    if (shots > 0) {
      const auto res = cqed::calib::rabi_calibration(
          dev, linspace(0.0, 3.0, 61), style, gt.omega_q01, shots);
      for (std::size_t i = 0; i < res.amps.size(); ++i)
        rows.push_back({res.amps[i], res.populations[i]});
    }
  } else if (experiment == "t1") {
    columns = {"t_s", "p_excited"};
    if (shots > 0) {
      const auto res = cqed::calib::measure_t1(
          dev, linspace(0.0, 5.0 * gt.t1, 41), amps, style, gt.omega_q01,
          shots);
      for (std::size_t i = 0; i < res.t.size(); ++i)
        rows.push_back({res.t[i], res.p[i]});
    }
  } else if (experiment == "ramsey") {
    columns = {"t_s", "p_excited"};
    if (shots > 0) {
      const auto res = cqed::calib::measure_ramsey(
          dev, linspace(0.0, 2.0 * gt.t2_star(), 61), 2e5, amps, style,
          gt.omega_q01, shots);
      for (std::size_t i = 0; i < res.t.size(); ++i)
        rows.push_back({res.t[i], res.p[i]});
    }
  } else {
    throw InputError("simulate: unknown experiment '" + experiment +
                     "' (expected s21|two_tone|rabi|t1|ramsey)");
  }

  (void)format;
  const std::string csv =
      csv_text({{"tool_version", kToolVersion},
                {"input_hash", hash_hex(fnv1a64(text))},
                {"seed", std::to_string(seed)},
                {"experiment", experiment},
                {"shots", std::to_string(shots)}},
               columns, rows);
  write_file(out_dir / (experiment + ".csv"), csv);
  std::cout << (out_dir / (experiment + ".csv")).string() << ": " << rows.size()
            << " rows\n";
  return 0;
}

// --- fit ---------------------------------------------------------------------

struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<double> col(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r[c]);
        return v;
      }
    throw InputError("fit: dataset is missing required column '" + name + "'");
  }
};

Dataset parse_csv(const std::string& text) {
  Dataset d;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (d.columns.empty()) {
      d.columns = cells;
      continue;
    }
    if (cells.size() != d.columns.size())
      throw InputError("fit: ragged CSV row: " + line);
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    d.rows.push_back(row);
  }
  if (d.columns.empty()) throw InputError("fit: empty dataset");
  return d;
}

int cmd_fit(const std::string& dataset_path, const std::string& model,
            const fs::path& out_dir) {
  const std::string text = read_file(dataset_path);
  const Dataset data = parse_csv(text);

  ordered_json out;
  out["tool_version"] = kToolVersion;
  out["input_hash"] = hash_hex(fnv1a64(text));
  out["model"] = model;

  auto plot = [&](const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<double>& yfit) {
    ordered_json p;
    p["x"] = x;
    p["y"] = y;
    p["y_fit"] = yfit;
    ordered_json res = ordered_json::array();
    for (std::size_t i = 0; i < y.size(); ++i) res.push_back(y[i] - yfit[i]);
    p["residual"] = res;
    out["plot"] = p;
  };

  if (model == "s21") {
    const auto f = data.col("f_hz");
    const auto re = data.col("s21_re");
    const auto im = data.col("s21_im");
    std::vector<std::complex<double>> s21(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) s21[i] = {re[i], im[i]};
    const auto fit = cqed::calib::fit_resonator(f, s21);
    out["converged"] = fit.converged;
    out["params"] = {{"f_r_hz", fit.f_r},       {"kappa", fit.kappa},
                     {"kappa_c", fit.kappa_c},  {"kappa_i", fit.kappa_i},
                     {"q_c", fit.q_c},          {"q_i", fit.q_i},
                     {"amplitude", fit.amplitude}};
    out["uncertainties"] = {{"f_r_hz", fit.f_r_err}, {"kappa", fit.kappa_err}};
    out["residual_norm"] = fit.residual_norm;
    // Magnitude plot from the fitted hanger model.
    std::vector<double> mag(f.size()), magfit(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      mag[i] = std::abs(s21[i]);
      const double omega = kTwoPi * f[i];
      const double omega_r = kTwoPi * fit.f_r;
      const std::complex<double> lorentz =
          (fit.kappa_c / fit.kappa) /
          (1.0 + std::complex<double>(0.0, 2.0) * (omega - omega_r) / fit.kappa);
      magfit[i] = std::abs(fit.amplitude *
                           (1.0 + fit.alpha_slope * (f[i] - fit.f_r) / fit.f_r) *
                           (1.0 - lorentz));
    }
    plot(f, mag, magfit);
  } else if (model == "t1" || model == "exp") {
    const auto t = data.col(data.columns[0]);
    const auto p = data.col(data.columns[1]);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    const auto modelf = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& q) {
      return (q(0) * (-xs.array() / q(2)).exp() + q(1)).matrix().eval();
    };
    Eigen::VectorXd p0(3);
    p0 << y(0) - y(y.size() - 1), y(y.size() - 1),
        std::max(x(x.size() - 1) / 3.0, 1e-12);
    cqed::numerics::FitOptions fo;
    Eigen::VectorXd lower(3), upper(3);
    lower << -2.0, -1.0, 1e-12;
    upper << 2.0, 2.0, 1e6;
    fo.lower = lower, fo.upper = upper;
    auto fit = cqed::numerics::least_squares_fit(modelf, x, y, p0, fo);
    // A time constant is only meaningful when the decay amplitude clears
    // the residual scatter.
    const double scatter =
        fit.residual_norm / std::sqrt(static_cast<double>(y.size()));
    const bool ok = fit.converged && std::abs(fit.params(0)) > 5.0 * scatter;
    out["converged"] = ok;
    out["params"] = {{"amplitude", fit.params(0)},
                     {"offset", fit.params(1)},
                     {"t1_s", fit.params(2)}};
    out["uncertainties"] = {{"amplitude", fit.stderr_of(0)},
                            {"offset", fit.stderr_of(1)},
                            {"t1_s", fit.stderr_of(2)}};
    out["residual_norm"] = fit.residual_norm;
    const Eigen::VectorXd yf = modelf(x, fit.params);
    plot(t, p, {yf.data(), yf.data() + yf.size()});
  } else if (model == "rabi") {
    const auto a = data.col(data.columns[0]);
    const auto p = data.col(data.columns[1]);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    const auto modelf = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& q) {
      return (q(1) - q(0) * (kTwoPi * xs.array() / q(2)).cos()).matrix().eval();
    };
    Eigen::VectorXd p0(3);
    p0 << (y.maxCoeff() - y.minCoeff()) / 2.0, y.mean(),
        2.0 * (x(x.size() - 1) - x(0)) / 3.0;
    auto fit = cqed::numerics::least_squares_fit(modelf, x, y, p0);
    out["converged"] = fit.converged;
    out["params"] = {{"amplitude", fit.params(0)},
                     {"offset", fit.params(1)},
                     {"period", fit.params(2)},
                     {"pi_amp", fit.params(2) / 2.0}};
    out["uncertainties"] = {{"period", fit.stderr_of(2)}};
    out["residual_norm"] = fit.residual_norm;
    const Eigen::VectorXd yf = modelf(x, fit.params);
    plot(a, p, {yf.data(), yf.data() + yf.size()});
  } else {
    throw InputError("fit: unknown model '" + model +
                     "' (expected s21|t1|exp|rabi)");
  }

  write_file(out_dir / ("fit_" + model + ".json"), out.dump(2) + "\n");
  std::cout << (out_dir / ("fit_" + model + ".json")).string() << "\n";
  return 0;
}

// --- tuneup ------------------------------------------------------------------

int cmd_tuneup(const std::string& device_path, const std::string& graph_path,
               const fs::path& out_dir,
               std::optional<std::uint64_t> seed_override) {
  const std::string device_json = read_file(device_path);
  const std::string graph_json = read_file(graph_path);
  cqed::calib::TuneupRunOutput res;
  try {
    res = cqed::calib::run_tuneup_from_json(device_json, graph_json,
                                            seed_override);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  write_file(out_dir / "tuneup_report.json", res.report_json);
  for (const auto& [rel, contents] : res.raw_csv)
    write_file(out_dir / rel, contents);
  std::cout << (out_dir / "tuneup_report.json").string()
            << (res.all_required_passed ? ": all required nodes passed"
                                        : ": calibration FAILED")
            << "\n";
  return res.all_required_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cqedtwin: virtual transmon-resonator device toolkit"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int shots = 2000;
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", seed, "override the device seed");
  app.add_option("--shots", shots, "shots / averages per point")
      ->check(CLI::NonNegativeNumber);

  std::string budget_config, sim_device, sim_experiment, fit_dataset, fit_model;
  std::string tune_device, tune_graph;

  auto* budget = app.add_subcommand("budget", "design-stage budget tables");
  budget->add_option("config", budget_config, "budget config JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "synthetic dataset");
  simulate->add_option("device", sim_device, "device JSON")->required();
  simulate->add_option("experiment", sim_experiment,
                       "s21|two_tone|rabi|t1|ramsey")->required();

  auto* fit = app.add_subcommand("fit", "fit a dataset");
  fit->add_option("dataset", fit_dataset, "CSV dataset")->required();
  fit->add_option("model", fit_model, "s21|t1|exp|rabi")->required();

  auto* tuneup = app.add_subcommand("tuneup", "run the calibration graph");
  tuneup->add_option("device", tune_device, "device JSON")->required();
  tuneup->add_option("graph", tune_graph, "graph JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (budget->parsed()) return cmd_budget(budget_config, out_dir, format);
    if (simulate->parsed())
      return cmd_simulate(sim_device, sim_experiment, out_dir, format, seed,
                          shots);
    if (fit->parsed()) return cmd_fit(fit_dataset, fit_model, out_dir);
    if (tuneup->parsed())
      return cmd_tuneup(tune_device, tune_graph, out_dir, seed);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
