#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "netdemix/graph.hpp"
#include "netdemix/layers.hpp"
#include "netdemix/model.hpp"
#include "netdemix/sirs.hpp"
#include "netdemix/training.hpp"

namespace netdemix {

enum class ExperimentKind { Density, Size, TrainSize, School };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

enum class Precision { F32, F64 };

/// Everything a run needs. The flat config format uses the dotted key next
/// to each field, e.g. `graph.radius = 0.25`.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Density;      // experiment
  std::vector<ModelKind> models = {ModelKind::DDmix, ModelKind::MLP, ModelKind::CNNNodes,
                                   ModelKind::CNNTime};     // models

  RGGSpec graph{100, 0.25, 3, 1};                           // graph.n, graph.radius, graph.dimension, graph.seed
  std::string contacts_path;                                // graph.contacts
  int min_contacts = 5;                                     // graph.min_contacts
  std::size_t drop_classes = 4;                             // graph.drop_classes

  std::vector<double> density_mults = {1.0, 1.2, 0.7};      // test.density_mults
  std::vector<std::size_t> test_sizes = {100, 250, 500, 1000};  // test.sizes
  std::vector<double> test_radii = {0.25, 0.15, 0.1, 0.075};    // test.radii

  SIRSParams sirs;                                          // sirs.beta, sirs.delta, sirs.gamma
  std::vector<std::size_t> horizons = {10, 20};               // T
  std::size_t train_samples = 4500;                         // data.train_samples
  std::size_t test_samples = 1000;                          // data.test_samples
  std::size_t sources = 1;                                  // data.sources
  std::vector<std::size_t> train_size_grid = {0, 4, 8, 16, 64, 256, 1000, 4500};  // trainsize.grid

  LossWeights weights;                                      // loss.eta1, loss.eta2, loss.eta3, loss.sigma_y_sq
  PoolConnectivity pool = PoolConnectivity::Squared;        // model.pool_connectivity
  AdamSettings adam;                                        // optim.lr, optim.beta1, optim.beta2, optim.eps
  std::size_t batch_size = 4;                               // train.batch_size
  std::size_t max_epochs = 50;                              // train.max_epochs
  std::size_t patience = 5;                                 // train.patience
  double validation_fraction = 0.1;                         // train.validation_fraction

  std::size_t num_draws = 1;                                // eval.num_draws

  std::vector<std::uint64_t> seeds = {0};                   // seeds
  Precision precision = Precision::F64;                     // precision
  bool record_wall_time = false;                            // report.wall_time

  void validate() const;
  TrainSettings train_settings(std::uint64_t seed) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
/// keys are ParseErrors. Keys absent from the text keep their defaults.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment (used for CLI overrides).
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its current value, one per line, in canonical order.
std::string to_config_text(const ExperimentConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace netdemix
