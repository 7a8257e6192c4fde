#include "cqed/calib/report.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "cqed/calib/graph.hpp"
#include "cqed/sim/device.hpp"
#include "cqed/sim/ground_truth.hpp"

namespace cqed::calib {

using nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

namespace {

// Shortest text that round-trips to the same double (what nlohmann emits),
// so CSV and JSON artifacts agree and reruns are byte-identical.
std::string number_text(double v) { return ordered_json(v).dump(); }

const char* state_name(NodeState s) {
  switch (s) {
    case NodeState::Pass: return "pass";
    case NodeState::Fail: return "fail";
    case NodeState::Skipped: return "skipped";
    default: return "unknown";
  }
}

}  // namespace

std::string csv_text(
    const std::vector<std::pair<std::string, std::string>>& metadata,
    const std::vector<std::string>& columns,
    const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (const auto& [key, value] : metadata)
    out << "# " << key << ": " << value << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("csv_text: row width != header width");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << number_text(row[c]);
    out << "\n";
  }
  return out.str();
}

namespace {

TuneupOptions options_from_json(const ordered_json& j) {
  TuneupOptions o;
  if (!j.contains("options")) return o;
  const auto& d = j.at("options");
  auto num = [&](const char* key, double fallback) {
    return d.contains(key) ? d.at(key).get<double>() : fallback;
  };
  o.f_r_center = num("f_r_center_hz", o.f_r_center);
  o.f_r_span = num("f_r_span_hz", o.f_r_span);
  o.s21_points = static_cast<int>(num("s21_points", o.s21_points));
  o.s21_avg = static_cast<int>(num("s21_avg", o.s21_avg));
  o.f_q_lo = num("f_q_lo_hz", o.f_q_lo);
  o.f_q_hi = num("f_q_hi_hz", o.f_q_hi);
  o.spec_points = static_cast<int>(num("spec_points", o.spec_points));
  o.spec_omega_start = num("spec_omega_start", o.spec_omega_start);
  o.alpha_min = num("alpha_min_hz", o.alpha_min);
  o.alpha_max = num("alpha_max_hz", o.alpha_max);
  o.shots = static_cast<int>(num("shots", o.shots));
  o.rabi_max_amp = num("rabi_max_amp", o.rabi_max_amp);
  o.t1_max = num("t1_max_s", o.t1_max);
  o.t2_guess = num("t2_guess_s", o.t2_guess);
  o.min_t1 = num("min_t1_s", o.min_t1);
  o.min_t2 = num("min_t2_s", o.min_t2);
  o.max_allxy_severity = num("max_allxy_severity", o.max_allxy_severity);
  if (d.contains("powers_dbm"))
    o.powers_dbm = d.at("powers_dbm").get<std::vector<double>>();
  if (d.contains("include_mixer"))
    o.include_mixer = d.at("include_mixer").get<bool>();
  if (d.contains("include_flux_sweep"))
    o.include_flux_sweep = d.at("include_flux_sweep").get<bool>();
  if (d.contains("flux_bias_a"))
    o.flux_bias_a = d.at("flux_bias_a").get<std::vector<double>>();
  if (d.contains("allxy_table_path"))
    o.allxy_table_path = d.at("allxy_table_path").get<std::string>();
  return o;
}

}  // namespace

TuneupRunOutput run_tuneup_from_json(const std::string& device_json,
                                     const std::string& graph_json,
                                     std::optional<std::uint64_t> seed_override) {
  ordered_json dev_doc, graph_doc;
  try {
    dev_doc = ordered_json::parse(device_json);
    graph_doc = ordered_json::parse(graph_json);
  } catch (const ordered_json::parse_error& e) {
    throw std::invalid_argument(std::string("tuneup: JSON parse error: ") +
                                e.what());
  }

  sim::GroundTruth gt = sim::ground_truth_from_json_text(device_json);
  std::uint64_t seed = dev_doc.value("seed", std::uint64_t{1});
  if (seed_override) seed = *seed_override;

  const TuneupOptions opts = options_from_json(graph_doc);
  std::vector<std::string> optional_nodes;
  if (graph_doc.contains("optional_nodes"))
    optional_nodes =
        graph_doc.at("optional_nodes").get<std::vector<std::string>>();
  const auto is_optional = [&](const std::string& name) {
    for (const auto& n : optional_nodes)
      if (n == name) return true;
    return false;
  };

  sim::Device dev(gt, seed);
  const CalibGraph graph = default_single_qubit_graph(opts);
  const TuneupReport rep = graph.run(dev);

  const std::string input_hash =
      hash_hex(fnv1a64(device_json) ^ (fnv1a64(graph_json) * 3ull));

  TuneupRunOutput out;
  out.all_required_passed = true;

  ordered_json nodes = ordered_json::array();
  for (const auto& node : rep.nodes) {
    ordered_json nj;
    nj["name"] = node.name;
    nj["state"] = state_name(node.state);
    nj["optional"] = is_optional(node.name);
    nj["message"] = node.message;
    ordered_json files = ordered_json::array();
    for (const auto& series : node.raw) {
      const std::string rel = "raw/" + node.name + "_" + series.name + ".csv";
      files.push_back(rel);
      out.raw_csv.emplace_back(
          rel, csv_text({{"tool_version", kToolVersion},
                         {"input_hash", input_hash},
                         {"seed", std::to_string(seed)},
                         {"node", node.name},
                         {"series", series.name}},
                        series.columns, series.rows));
    }
    nj["raw_files"] = files;
    nodes.push_back(nj);
    if (node.state != NodeState::Pass && !is_optional(node.name))
      out.all_required_passed = false;
  }

  ordered_json record;
  for (const auto& [name, est] : rep.record.params) {
    record[name] = {{"value", est.value},
                    {"uncertainty", est.uncertainty},
                    {"source_node", est.source_node},
                    {"order", est.order}};
  }

  ordered_json doc;
  doc["tool_version"] = kToolVersion;
  doc["input_hash"] = input_hash;
  doc["seed"] = seed;
  doc["all_passed"] = rep.all_passed;
  doc["all_required_passed"] = out.all_required_passed;
  doc["nodes"] = nodes;
  doc["device_record"] = record;
  out.report_json = doc.dump(2) + "\n";
  return out;
}

}  // namespace cqed::calib
