#pragma once

// Dependency-graph tuneup executor: nodes run in topological order against
// the virtual device; a failed node blocks (skips) all dependents. The
// DeviceRecord collects every estimate with its uncertainty and provenance
// (producing node and execution index, which doubles as the deterministic
// timestamp).

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cqed/calib/experiments.hpp"
#include "cqed/sim/device.hpp"

namespace cqed::calib {

struct Estimate {
  double value = 0.0;
  double uncertainty = 0.0;
  std::string source_node;
  int order = 0;  // execution index of the producing node
};

struct DeviceRecord {
  std::map<std::string, Estimate> params;

  void set(const std::string& name, double value, double uncertainty,
           const std::string& node, int order) {
    params[name] = Estimate{value, uncertainty, node, order};
  }
  bool has(const std::string& name) const { return params.count(name) > 0; }
  double value(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
      throw std::out_of_range("DeviceRecord: missing parameter " + name);
    return it->second.value;
  }
};

enum class NodeState { Unknown, Pass, Fail, Skipped };

// Raw sweep data produced by a node (written to CSV by the CLI layer).
struct RawSeries {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct NodeContext {
  sim::Device& dev;
  DeviceRecord& record;
  int order = 0;
  std::vector<RawSeries>* raw = nullptr;

  void emit(RawSeries series) const {
    if (raw != nullptr) raw->push_back(std::move(series));
  }
};

struct CalibNode {
  std::string name;
  std::vector<std::string> deps;
  std::function<void(NodeContext&)> run;  // throwing marks the node failed
};

struct NodeReport {
  std::string name;
  NodeState state = NodeState::Unknown;
  std::string message;
  std::vector<RawSeries> raw;
};

struct TuneupReport {
  std::vector<NodeReport> nodes;
  DeviceRecord record;
  bool all_passed = false;
};

class CalibGraph {
 public:
  void add(CalibNode node);
  const std::vector<CalibNode>& nodes() const { return nodes_; }

  // Kahn topological order; throws on cycles or dangling dependencies.
  std::vector<std::size_t> topological_order() const;

  TuneupReport run(sim::Device& dev) const;

 private:
  std::vector<CalibNode> nodes_;
};

struct TuneupOptions {
  // Resonator search window and probe powers (must bracket punchout).
  double f_r_center = 7.0e9;
  double f_r_span = 80e6;
  std::vector<double> powers_dbm = {-90.0, -85.0, -80.0, -70.0, -60.0,
                                    -50.0, -40.0, -30.0, -25.0};
  int s21_points = 401;
  int s21_avg = 30;

  // Qubit spectroscopy window.
  double f_q_lo = 4.6e9;
  double f_q_hi = 5.4e9;
  int spec_points = 801;
  double spec_omega_start = 4.0e6;  // rad/s; broadens the line onto the grid

  // Anharmonicity search range (f01 - f12).
  double alpha_min = 120e6;
  double alpha_max = 400e6;

  PulseStyle style;
  int shots = 2000;
  double rabi_max_amp = 3.0;
  double t1_max = 200e-6;
  double t2_guess = 20e-6;

  std::string allxy_table_path = "data/allxy.json";
  bool include_mixer = true;
  bool include_flux_sweep = false;
  std::vector<double> flux_bias_a;

  // Default acceptance thresholds (config-supplied predicates).
  double min_t1 = 1e-6;
  double min_t2 = 1e-6;
  double max_allxy_severity = 0.5;  // injected-unit equivalents
};

// The standard single-qubit tuneup graph: resonator scan -> punchout ->
// two-tone -> three-tone -> rabi -> frequency cal -> drag -> pulse train ->
// coherence (T1 / Ramsey / echo) -> chi -> readout -> allxy (+ mixer).
CalibGraph default_single_qubit_graph(const TuneupOptions& opts = {});

}  // namespace cqed::calib
