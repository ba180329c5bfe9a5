#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstep/core/pomdp.hpp"
#include "mstep/harness/csv.hpp"
#include "mstep/oracle/qfunction.hpp"

namespace mstep {

const char* library_version();

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

// Environment spec: {"file": path} or {"kind": "lock", "m", "A"} / {"kind": "hadamard", "s"} /
// {"kind": "random", "S", "O", "A", "H", "m", "seed", "max_retries"}. Relative paths resolve
// against base_dir.
Pomdp build_environment(const nlohmann::ordered_json& spec, const std::filesystem::path& base_dir);

// Class spec: {"file": path}, {"kind": "hadamard"} (hadamard environments only) or
// {"kind": "decoys", "decoys", "seed"}. A null spec picks hadamard or 3 decoys.
FunctionClassPair build_class(const nlohmann::ordered_json& spec,
                              const nlohmann::ordered_json& env_spec, const Pomdp& pomdp,
                              const std::filesystem::path& base_dir);

struct ExperimentConfig {
  nlohmann::ordered_json env;
  nlohmann::ordered_json function_class;  // key "class"
  std::string algorithm;                  // mgolf | ucbvi | isrl | olive
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::vector<std::uint64_t> seeds;
  std::string output;
  std::optional<std::uint64_t> master_seed;
  std::filesystem::path base_dir = ".";

  // Schema validation; unknown keys and empty seed lists are ConfigErrors.
  static ExperimentConfig from_json(const nlohmann::ordered_json& doc,
                                    const std::filesystem::path& base_dir, bool require_output = true);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  // Hash of the canonical config without the output path.
  std::uint64_t hash() const;
  // Seed actually used for seeds[i].
  std::uint64_t effective_seed(std::size_t i) const;
};

// Runs every seed in order and returns the metric rows (no files written).
CsvTable execute_experiment(const ExperimentConfig& config);

struct ExperimentRecord {
  std::uint64_t config_hash = 0;
  CsvTable table;
  double wall_clock_seconds = 0.0;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
};

// Writes <output> (CSV) and <output>.manifest.json.
ExperimentRecord run_experiment(const ExperimentConfig& config);

struct SweepFailure {
  std::size_t index = 0;
  std::string error;
};

struct SweepResult {
  CsvTable table;  // config_index, config_hash, algorithm, then the union of metric columns
  std::vector<SweepFailure> failures;
};

// Runs configs on `parallelism` threads. Each member inherits `master_seed` unless it sets its
// own. Rows are assembled in config order, so the table does not depend on scheduling.
SweepResult sweep(const std::vector<ExperimentConfig>& configs, int parallelism,
                  std::optional<std::uint64_t> master_seed);

// Sweep file: {"configs": [...], "master_seed", "parallelism", "output"}; writes the aggregated
// CSV and a manifest listing failures.
SweepResult run_sweep_file(const std::filesystem::path& path, std::optional<int> parallelism);

}  // namespace mstep
