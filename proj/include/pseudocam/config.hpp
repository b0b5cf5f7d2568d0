#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pseudocam/jsonl.hpp"
#include "pseudocam/pipeline.hpp"
#include "pseudocam/shots.hpp"
#include "pseudocam/train.hpp"

namespace pseudocam {

/// Flat key/value run configuration. Loaded from a JSON object whose keys
/// must all be known; command-line flags override file values.
struct RunConfig {
  PipelineConfig pipeline;
  DetectorParams detector;
  TrainConfig train;
  int bins = 4;
  int jobs = 0;  // 0: OpenMP default
  bool paper_parity = false;

  /// Applies every key of `j`; throws FormatError on unknown keys or bad values.
  void merge(const jsonl::Json& j, const std::string& source);

  /// Pins epochs, lr, batch size and seeds to the paper-parity preset.
  void apply_paper_parity();

  jsonl::Json to_json() const;

  static RunConfig load(const std::filesystem::path& path);
};

/// Writes `config` as `<output>.config.json`.
std::filesystem::path write_resolved_config(const std::filesystem::path& output, const RunConfig& config);

}  // namespace pseudocam
