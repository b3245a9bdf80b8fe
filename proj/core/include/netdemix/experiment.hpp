#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netdemix/config.hpp"
#include "netdemix/metrics.hpp"
#include "netdemix/training.hpp"

namespace netdemix {

struct ExperimentOptions {
  /// When set, every trained (model, seed, T, train size) cell saves its
  /// best checkpoint below this directory.
  std::optional<std::filesystem::path> checkpoint_root;
  std::function<void(const std::string&)> log;
};

struct ExperimentResult {
  ExperimentConfig config;
  ExperimentKind kind = ExperimentKind::Density;
  std::vector<MetricsReport> reports;
  /// Seeds, graphs, dropped classes, per-cell training summaries and
  /// checkpoint digests.
  nlohmann::json manifest;
};

/// Trains each selected model once per seed (and per T / train size where
/// the kind sweeps them) and evaluates it on the kind's test graphs.
///
/// density:   fresh graphs at radius * each density multiplier
/// size:      fresh graphs at each (test.sizes, test.radii) pair
/// trainsize: training on the first m samples for m in trainsize.grid
/// school:    day-1 contact graph minus graph.drop_classes random classes
///            for training, full day-2 graph for testing
///
/// Throws CapabilityError up front when the MLP is selected for a kind
/// whose test graphs differ in size from the training graph.
ExperimentResult run_experiment(const ExperimentConfig& cfg, ExperimentKind kind,
                                const ExperimentOptions& opts = {});

inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const ExperimentOptions& opts = {}) {
  return run_experiment(cfg, cfg.experiment, opts);
}

/// Label of a density-multiplier test graph: baseline, denser, sparser.
std::string density_label(double mult);

}  // namespace netdemix
