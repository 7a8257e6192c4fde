#pragma once

// Tuneup run reports and dataset serialization shared by the command-line
// front end and the test suites. Everything here is deterministic: the
// execution index doubles as the timestamp and numbers are printed with
// shortest-round-trip formatting, so identical inputs and seed reproduce
// byte-identical artifacts.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cqed::calib {

inline constexpr const char* kToolVersion = "cqedtwin 1.0.0";

// FNV-1a 64-bit content hash, embedded in every output file.
std::uint64_t fnv1a64(std::string_view text);
std::string hash_hex(std::uint64_t h);

// RFC-4180-style CSV with a header row, preceded by '#'-prefixed metadata
// lines (key: value). Rows are doubles, shortest-round-trip formatted.
std::string csv_text(
    const std::vector<std::pair<std::string, std::string>>& metadata,
    const std::vector<std::string>& columns,
    const std::vector<std::vector<double>>& rows);

struct TuneupRunOutput {
  std::string report_json;  // the RunReport document
  // Raw sweep datasets referenced by the report: relative path -> contents.
  std::vector<std::pair<std::string, std::string>> raw_csv;
  bool all_required_passed = false;
};

// Executes the default tuneup graph described by a graph JSON document
// against the device described by a device JSON document. The device file
// holds {ground_truth: {...}, seed}; the graph file holds {options: {...},
// optional_nodes: [...]}. Nodes listed as optional do not affect
// all_required_passed. Throws std::invalid_argument on schema violations.
TuneupRunOutput run_tuneup_from_json(
    const std::string& device_json, const std::string& graph_json,
    std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace cqed::calib
