#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdemix/model.hpp"

namespace netdemix {

struct TrainSettings {
  AdamSettings adam;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  /// Round parameters to float32 after every update.
  bool float32_params = false;

  void validate() const;
};

/// Patience rule: stop once `patience` consecutive epochs fail to improve on
/// the best validation loss, or when max_epochs is reached.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, std::size_t max_epochs);

  /// Feeds the validation loss of the next epoch; true means stop now.
  bool update(double val_loss);

  /// 1-based epoch with the lowest loss so far (earliest on ties).
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }
  std::size_t epochs_seen() const noexcept { return epochs_; }
  /// True if the most recent update set a new best.
  bool improved() const noexcept { return improved_; }

 private:
  std::size_t patience_;
  std::size_t max_epochs_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_;
  bool improved_ = false;
};

struct TrainReport {
  std::vector<double> train_losses;  ///< mean minibatch loss per epoch
  std::vector<double> val_losses;
  std::size_t stopping_epoch = 0;
  std::size_t best_epoch = 0;
  /// Mean training-set loss (inference mode) before the first and after the last update.
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

/// First ceil((1 - validation_fraction) * M) samples train, the rest validate.
DatasetSplit split_train_validation(std::vector<Sample> samples, double validation_fraction = 0.1);

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

/// Minibatch Adam with early stopping. The parameters with the best
/// validation loss are restored at the end and, when `checkpoint_dir` is
/// given, saved there. Deterministic given settings.seed.
TrainReport train(Model& model, const GraphContext& ctx, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainSettings& settings,
                  const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt,
                  const EpochCallback& on_epoch = {});

/// Mean per-sample objective in inference mode with fixed per-sample substreams.
double mean_loss(Model& model, const GraphContext& ctx, std::span<const Sample> samples,
                 std::uint64_t seed);

}  // namespace netdemix
