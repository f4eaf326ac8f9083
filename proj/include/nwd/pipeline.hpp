// Ordered, reproducible processing pipelines driven by a small text configuration.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nwd {

struct StageSpec {
  std::string name;
  std::map<std::string, std::string> params;
};

struct PipelineConfig {
  std::vector<StageSpec> stages;
  std::optional<std::uint64_t> seed;
  std::filesystem::path input;    // trace CSV, or
  std::filesystem::path simulate; // scenario file
  std::size_t wire = 0;           // wire of the simulated scenario to process
  std::filesystem::path out_dir = ".";
  std::string canonical;          // normalized config text, hashed into provenance headers
};

/// Line-based:
///   seed <n>
///   input <trace.csv> | simulate <scenario.txt> [wire <index>]
///   stage <name> [key=value ...]
/// Relative paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(std::istream& in, const std::filesystem::path& base_dir = ".");
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

/// Stage names accepted by run_pipeline.
const std::vector<std::string>& pipeline_stage_names();

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string config_hash(const std::string& text);

/// "nwdetect config=<hash> seed=<seed|none>"
std::string provenance_line(const std::string& canonical_config, std::optional<std::uint64_t> seed);

struct PipelineResult {
  std::vector<std::filesystem::path> files; // in creation order
};

/// Executes the stages in order, writing every artifact inside config.out_dir. The final trace
/// always lands in output.csv.
PipelineResult run_pipeline(const PipelineConfig& config);

} // namespace nwd
