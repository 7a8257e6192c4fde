#include "cqed/calib/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cqed/readout.hpp"

namespace cqed::calib {

void CalibGraph::add(CalibNode node) {
  for (const auto& n : nodes_) {
    if (n.name == node.name)
      throw std::invalid_argument("CalibGraph: duplicate node " + node.name);
  }
  nodes_.push_back(std::move(node));
}

std::vector<std::size_t> CalibGraph::topological_order() const {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) index[nodes_[i].name] = i;

  std::vector<std::vector<std::size_t>> children(nodes_.size());
  std::vector<int> in_degree(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& dep : nodes_[i].deps) {
      auto it = index.find(dep);
      if (it == index.end())
        throw std::invalid_argument("CalibGraph: node " + nodes_[i].name +
                                    " depends on unknown node " + dep);
      children[it->second].push_back(i);
      ++in_degree[i];
    }
  }

  // Kahn's algorithm; ready nodes are taken in insertion order so the
  // execution order is a deterministic function of the graph alone.
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (in_degree[i] == 0) ready.push_back(i);

  std::vector<std::size_t> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    std::size_t i = ready.front();
    ready.pop_front();
    order.push_back(i);
    for (std::size_t c : children[i])
      if (--in_degree[c] == 0) ready.push_back(c);
  }
  if (order.size() != nodes_.size())
    throw std::invalid_argument("CalibGraph: dependency cycle detected");
  return order;
}

TuneupReport CalibGraph::run(sim::Device& dev) const {
  const auto order = topological_order();

  TuneupReport report;
  report.nodes.resize(nodes_.size());
  std::map<std::string, NodeState> state;

  int exec_index = 0;
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const CalibNode& node = nodes_[order[slot]];
    NodeReport& nr = report.nodes[slot];
    nr.name = node.name;

    bool blocked = false;
    for (const auto& dep : node.deps) {
      if (state[dep] != NodeState::Pass) {
        blocked = true;
        nr.message = "skipped: dependency " + dep + " did not pass";
        break;
      }
    }
    if (blocked) {
      nr.state = NodeState::Skipped;
      state[node.name] = NodeState::Skipped;
      continue;
    }

    NodeContext ctx{dev, report.record, exec_index, &nr.raw};
    try {
      node.run(ctx);
      nr.state = NodeState::Pass;
      nr.message = "ok";
    } catch (const std::exception& e) {
      nr.state = NodeState::Fail;
      nr.message = e.what();
    }
    state[node.name] = nr.state;
    ++exec_index;
  }

  report.all_passed =
      std::all_of(report.nodes.begin(), report.nodes.end(),
                  [](const NodeReport& n) { return n.state == NodeState::Pass; });
  return report;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

RawSeries curve(const std::string& name, const std::string& xcol,
                const std::string& ycol, const std::vector<double>& x,
                const std::vector<double>& y) {
  RawSeries s;
  s.name = name;
  s.columns = {xcol, ycol};
  s.rows.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s.rows.push_back({x[i], y[i]});
  return s;
}

GateAmps record_amps(const DeviceRecord& rec) {
  GateAmps amps;
  amps.pi_amp = rec.value("pi_amp");
  amps.pi2_amp = rec.value("pi2_amp");
  amps.drag = rec.has("drag") ? rec.value("drag") : 0.0;
  return amps;
}

}  // namespace

CalibGraph default_single_qubit_graph(const TuneupOptions& opts) {
  CalibGraph g;
  const PulseStyle style = opts.style;

  g.add({"resonator_scan", {}, [opts](NodeContext& ctx) {
           const auto f = linspace(opts.f_r_center - opts.f_r_span / 2,
                                   opts.f_r_center + opts.f_r_span / 2,
                                   opts.s21_points);
           const double p_low =
               *std::min_element(opts.powers_dbm.begin(), opts.powers_dbm.end());
           auto pts = ctx.dev.scan_s21(f, p_low, opts.s21_avg);
           std::vector<std::complex<double>> s21(pts.size());
           std::vector<double> mag(pts.size());
           for (std::size_t i = 0; i < pts.size(); ++i) {
             s21[i] = pts[i].s21;
             mag[i] = std::abs(pts[i].s21);
           }
           auto fit = fit_resonator(f, s21);
           ctx.record.set("f_r_dressed", fit.f_r, fit.f_r_err, "resonator_scan",
                          ctx.order);
           ctx.record.set("kappa", fit.kappa, fit.kappa_err, "resonator_scan",
                          ctx.order);
           ctx.record.set("kappa_c", fit.kappa_c, 0.0, "resonator_scan",
                          ctx.order);
           ctx.record.set("q_internal", fit.q_i, 0.0, "resonator_scan",
                          ctx.order);
           ctx.emit(curve("resonator_scan", "f_hz", "s21_mag", f, mag));
           if (!fit.converged)
             throw std::runtime_error("resonator fit did not converge");
         }});

  g.add({"punchout", {"resonator_scan"}, [opts](NodeContext& ctx) {
           auto scan = resonator_power_scan(ctx.dev, ctx.record.value("f_r_dressed"),
                                            opts.f_r_span, opts.powers_dbm,
                                            opts.s21_points, opts.s21_avg);
           ctx.record.set("f_r_bare", scan.f_bare, 0.0, "punchout", ctx.order);
           ctx.record.set("lamb_shift", scan.lamb_shift_est, 0.0, "punchout",
                          ctx.order);
           ctx.record.set("readout_power_dbm", scan.suggested_power_dbm, 0.0,
                          "punchout", ctx.order);
           std::vector<double> fdress(scan.powers_dbm.size());
           for (std::size_t i = 0; i < scan.fits.size(); ++i)
             fdress[i] = scan.fits[i].f_r;
           ctx.emit(curve("punchout", "power_dbm", "f_r_hz", scan.powers_dbm,
                          fdress));
         }});

  g.add({"two_tone", {"punchout"}, [opts](NodeContext& ctx) {
           // Start strong enough that the power-broadened line spans a few
           // grid steps; the natural linewidth is far below the coarse grid.
           auto res = two_tone_spectroscopy(ctx.dev, opts.f_q_lo, opts.f_q_hi,
                                            opts.spec_points, opts.shots,
                                            opts.spec_omega_start);
           ctx.record.set("f_q", res.f_q, res.f_q_err, "two_tone", ctx.order);
           ctx.record.set("f_q_linewidth", res.natural_linewidth, 0.0,
                          "two_tone", ctx.order);
           ctx.emit(curve("two_tone", "f_hz", "p1", res.f_hz, res.response));
         }});

  g.add({"three_tone", {"two_tone"}, [opts](NodeContext& ctx) {
           const double f01 = ctx.record.value("f_q");
           // A strong second tone power-broadens the two-photon ridge so a
           // coarse (sub-MHz) grid still resolves it.
           auto res = three_tone_anharmonicity(
               ctx.dev, f01, f01 - 12e6, f01 + 12e6, f01 - opts.alpha_max - 15e6,
               f01 - opts.alpha_min + 15e6, 13,
               static_cast<int>((opts.alpha_max - opts.alpha_min + 30e6) / 0.5e6) + 1,
               opts.shots, 3.0e6);
           ctx.record.set("alpha", res.alpha, 0.0, "three_tone", ctx.order);
         }});

  g.add({"rabi", {"two_tone"}, [opts, style](NodeContext& ctx) {
           const auto amps = linspace(0.0, opts.rabi_max_amp, 46);
           auto res = rabi_calibration(ctx.dev, amps, style,
                                       ctx.record.value("f_q"), opts.shots);
           ctx.record.set("pi_amp", res.pi_amp, res.pi_amp_err, "rabi",
                          ctx.order);
           ctx.record.set("pi2_amp", res.pi2_amp, res.pi_amp_err / 2, "rabi",
                          ctx.order);
           ctx.emit(curve("rabi", "amp", "p1", res.amps, res.populations));
           if (!res.converged)
             throw std::runtime_error("rabi fit did not converge");
         }});

  g.add({"freq_cal", {"rabi"}, [opts, style](NodeContext& ctx) {
           const double t2_guess = opts.t2_guess;
           const double bound =
               std::clamp(5.0 * ctx.record.params.at("f_q").uncertainty,
                          50e3, 1e6);
           auto res = repeated_ramsey_frequency_cal(
               ctx.dev, ctx.record.value("f_q"), t2_guess, record_amps(ctx.record),
               style, opts.shots, bound);
           if (res.aliased)
             throw std::runtime_error("frequency calibration aliased");
           ctx.record.set("f_q", res.f_q, res.uncertainty, "freq_cal", ctx.order);
           ctx.record.set("t2_guess", t2_guess, 0.0, "freq_cal", ctx.order);
         }});

  g.add({"drag_cal", {"freq_cal", "three_tone"}, [opts, style](NodeContext& ctx) {
           auto res = drag_calibration(ctx.dev, record_amps(ctx.record), style,
                                       ctx.record.value("f_q"), opts.shots);
           ctx.record.set("drag", res.d_amp, 0.0, "drag_cal", ctx.order);
           ctx.emit(curve("drag_cal", "drag", "diff", res.sweep, res.diff));
         }});

  g.add({"pulse_train", {"drag_cal"}, [opts, style](NodeContext& ctx) {
           auto res = pulse_train_amplitude_cal(ctx.dev, record_amps(ctx.record),
                                                style, ctx.record.value("f_q"),
                                                {1, 2, 3, 5, 7, 9}, opts.shots);
           ctx.record.set("pi_amp", res.pi_amp, 0.0, "pulse_train", ctx.order);
           ctx.record.set("pi2_amp", res.pi_amp / 2, 0.0, "pulse_train",
                          ctx.order);
         }});

  g.add({"t1", {"pulse_train"}, [opts, style](NodeContext& ctx) {
           auto delays = linspace(0.0, opts.t1_max, 41);
           auto res = measure_t1(ctx.dev, delays, record_amps(ctx.record),
                                 style, ctx.record.value("f_q"), opts.shots);
           if (res.grid_too_short) {
             delays = linspace(0.0, 3.0 * opts.t1_max, 41);
             res = measure_t1(ctx.dev, delays, record_amps(ctx.record), style,
                              ctx.record.value("f_q"), opts.shots);
           }
           ctx.record.set("t1", res.time_constant, res.time_err, "t1",
                          ctx.order);
           ctx.emit(curve("t1", "delay_s", "p1", res.t, res.p));
           if (res.time_constant < opts.min_t1)
             throw std::runtime_error("t1 below acceptance threshold");
         }});

  g.add({"ramsey_t2", {"pulse_train"}, [opts, style](NodeContext& ctx) {
           const double t2g = ctx.record.has("t2_guess")
                                  ? ctx.record.value("t2_guess")
                                  : opts.t2_guess;
           const auto delays = linspace(0.0, 2.5 * t2g, 61);
           const double f_art = 4.0 / delays.back();
           auto res = measure_ramsey(ctx.dev, delays, f_art,
                                     record_amps(ctx.record), style,
                                     ctx.record.value("f_q"), opts.shots);
           ctx.record.set("t2_star", res.time_constant, res.time_err,
                          "ramsey_t2", ctx.order);
           ctx.record.set("residual_detuning", res.freq - f_art, res.freq_err,
                          "ramsey_t2", ctx.order);
           ctx.emit(curve("ramsey_t2", "delay_s", "p1", res.t, res.p));
           if (res.time_constant < opts.min_t2)
             throw std::runtime_error("t2* below acceptance threshold");
         }});

  g.add({"echo", {"ramsey_t2"}, [opts, style](NodeContext& ctx) {
           const auto delays = linspace(0.0, 3.0 * ctx.record.value("t2_star"),
                                        41);
           auto res = measure_echo(ctx.dev, delays, record_amps(ctx.record),
                                   style, ctx.record.value("f_q"), opts.shots);
           ctx.record.set("t2_echo", res.time_constant, res.time_err, "echo",
                          ctx.order);
           ctx.emit(curve("echo", "delay_s", "p1", res.t, res.p));
         }});

  g.add({"chi", {"punchout", "three_tone", "freq_cal"}, [](NodeContext& ctx) {
           const double delta =
               ctx.record.value("f_q") - ctx.record.value("f_r_bare");
           const double chi = 2.0 * ctx.record.value("alpha") *
                              ctx.record.value("lamb_shift") / delta;
           ctx.record.set("chi", chi, 0.0, "chi", ctx.order);
         }});

  g.add({"readout_cal", {"pulse_train"}, [](NodeContext& ctx) {
           auto& dev = ctx.dev;
           auto tg = dev.readout_avg(0, dev.default_readout_a_in,
                                     dev.default_readout_tau, 200);
           auto te = dev.readout_avg(1, dev.default_readout_a_in,
                                     dev.default_readout_tau, 200);
           auto w = readout::optimal_weights(tg, te);
           auto sg = dev.readout_shots(0, 1500, dev.default_readout_a_in,
                                       dev.default_readout_tau, 200, w, false);
           auto se = dev.readout_shots(1, 1500, dev.default_readout_a_in,
                                       dev.default_readout_tau, 200, w, false);
           auto lam = readout::assignment_matrix(sg.outcomes, se.outcomes);
           ctx.record.set("readout_fidelity", lam.fidelity(), 0.0,
                          "readout_cal", ctx.order);
           ctx.record.set("readout_threshold", lam.digitizer.threshold, 0.0,
                          "readout_cal", ctx.order);
           if (lam.fidelity() < 0.6)
             throw std::runtime_error("readout fidelity below threshold");
         }});

  g.add({"allxy", {"pulse_train", "freq_cal"}, [opts, style](NodeContext& ctx) {
           auto res = allxy(ctx.dev, record_amps(ctx.record), style,
                            ctx.record.value("f_q"), opts.shots,
                            opts.allxy_table_path);
           ctx.record.set("allxy_severity", res.severity, 0.0, "allxy",
                          ctx.order);
           std::vector<double> idx(res.trace.size()), p1(res.trace.begin(),
                                                         res.trace.end());
           for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = double(i);
           ctx.emit(curve("allxy", "index", "p1", idx, p1));
           if (res.syndrome != "none" &&
               res.severity > opts.max_allxy_severity) {
             std::ostringstream msg;
             msg << "allxy syndrome: " << res.syndrome << " severity "
                 << res.severity;
             throw std::runtime_error(msg.str());
           }
         }});

  if (opts.include_mixer) {
    g.add({"mixer", {}, [](NodeContext& ctx) {
             auto res = mixer_calibration(ctx.dev);
             ctx.record.set("mixer_i_offset", res.i_offset, 0.0, "mixer",
                            ctx.order);
             ctx.record.set("mixer_q_offset", res.q_offset, 0.0, "mixer",
                            ctx.order);
             ctx.record.set("mixer_imbalance", res.imbalance, 0.0, "mixer",
                            ctx.order);
             ctx.record.set("mixer_skew", res.skew, 0.0, "mixer", ctx.order);
           }});
  }

  if (opts.include_flux_sweep) {
    g.add({"flux_sweep", {"resonator_scan"}, [opts](NodeContext& ctx) {
             auto biases = opts.flux_bias_a;
             if (biases.empty()) biases = linspace(-0.5e-3, 0.5e-3, 21);
             const double p_low = *std::min_element(opts.powers_dbm.begin(),
                                                    opts.powers_dbm.end());
             auto res = resonator_flux_sweep(
                 ctx.dev, ctx.record.value("f_r_dressed"), opts.f_r_span,
                 biases, p_low, opts.s21_points, opts.s21_avg);
             ctx.record.set("sweet_spot_bias_a", res.sweet_spot_a, 0.0,
                            "flux_sweep", ctx.order);
             ctx.emit(curve("flux_sweep", "bias_a", "f_r_hz", res.bias,
                            res.f_r));
           }});
  }

  return g;
}

}  // namespace cqed::calib
