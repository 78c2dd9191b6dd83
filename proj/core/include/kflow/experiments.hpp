#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kflow/config.hpp"
#include "kflow/metrics.hpp"
#include "kflow/pgm.hpp"

namespace kflow {

struct ExperimentResult {
  std::vector<std::filesystem::path> artifacts;
  std::vector<MetricSeries> series;
  std::map<std::string, double> summary;

  /// Throws std::out_of_range when no series has that name.
  const MetricSeries& find(const std::string& name) const;
};

/// Each driver validates a copy of cfg, runs, and writes its artifacts under
/// cfg.output_dir (created if missing).
ExperimentResult run_gaussian_experiment(const ExperimentConfig& cfg);
ExperimentResult run_gmm_experiment(const ExperimentConfig& cfg);
ExperimentResult run_morph_experiment(const ExperimentConfig& cfg);
ExperimentResult quiver_export(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// "builtin:<name>" or a PGM path (relative paths resolve against base_dir).
GrayscaleMask resolve_mask(const std::string& spec, const std::filesystem::path& base_dir);

}  // namespace kflow
