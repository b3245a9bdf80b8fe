#include "netdemix/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "netdemix/checkpoint.hpp"
#include "netdemix/errors.hpp"

namespace netdemix {

void TrainSettings::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (max_epochs < 1) throw InvalidArgument("max epochs must be >= 1");
  if (patience < 1 || patience > max_epochs) throw InvalidArgument("patience must lie in [1, max_epochs]");
}

EarlyStopping::EarlyStopping(std::size_t patience, std::size_t max_epochs)
    : patience_(patience), max_epochs_(max_epochs), best_loss_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::update(double val_loss) {
  ++epochs_;
  improved_ = val_loss < best_loss_;
  if (improved_) {
    best_loss_ = val_loss;
    best_epoch_ = epochs_;
  }
  return epochs_ >= max_epochs_ || epochs_ - best_epoch_ >= patience_;
}

DatasetSplit split_train_validation(std::vector<Sample> samples, double validation_fraction) {
  if (samples.empty()) throw InvalidArgument("cannot split an empty dataset");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("validation fraction must lie in [0, 1)");
  auto n_train = std::size_t(std::ceil((1.0 - validation_fraction) * double(samples.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, samples.size());
  DatasetSplit split;
  split.validation.assign(std::make_move_iterator(samples.begin() + std::ptrdiff_t(n_train)),
                          std::make_move_iterator(samples.end()));
  samples.resize(n_train);
  split.train = std::move(samples);
  return split;
}

double mean_loss(Model& model, const GraphContext& ctx, std::span<const Sample> samples,
                 std::uint64_t seed) {
  if (samples.empty()) throw InvalidArgument("mean_loss: no samples");
  const Rng base(seed);
  double total = 0.0;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    Tape tape;
    Rng rng = base.split(m);
    total += model.training_loss(tape, ctx, samples[m], rng, false).value()(0, 0);
  }
  return total / double(samples.size());
}

TrainReport train(Model& model, const GraphContext& ctx, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainSettings& settings,
                  const std::optional<std::filesystem::path>& checkpoint_dir,
                  const EpochCallback& on_epoch) {
  settings.validate();
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  model.check_graph(ctx);
  const auto start = std::chrono::steady_clock::now();

  const std::uint64_t eval_seed = mix_seed(settings.seed ^ 0x5eedf00dULL);
  auto eval_loss = [&](std::span<const Sample> set) { return mean_loss(model, ctx, set, eval_seed); };

  TrainReport report;
  report.initial_train_loss = eval_loss(train_set);

  auto& store = model.params();
  OptimizerState opt;
  EarlyStopping stopper(settings.patience, settings.max_epochs);
  ParameterStore best = store;
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1;; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t(0));
    Rng shuffle = Rng(settings.seed).split(2 * epoch);
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    const Rng sample_rng = Rng(settings.seed).split(2 * epoch + 1);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += settings.batch_size) {
      const std::size_t end = std::min(order.size(), b + settings.batch_size);
      const double weight = 1.0 / double(end - b);
      store.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = b; k < end; ++k) {
        Tape tape;
        Rng rng = sample_rng.split(order[k]);
        Var loss = model.training_loss(tape, ctx, train_set[order[k]], rng, true);
        batch_loss += weight * loss.value()(0, 0);
        tape.backward(loss, weight);
      }
      adam_step(store, opt, settings.adam);
      if (settings.float32_params) store.round_to_float();
      epoch_loss += batch_loss;
      ++batches;
    }
    epoch_loss /= double(batches);
    const double val = validation_set.empty() ? eval_loss(train_set) : eval_loss(validation_set);
    report.train_losses.push_back(epoch_loss);
    report.val_losses.push_back(val);
    const bool stop = stopper.update(val);
    if (stopper.improved()) best = store;
    if (on_epoch) on_epoch(epoch, epoch_loss, val);
    if (stop) break;
  }

  store = std::move(best);
  report.stopping_epoch = stopper.epochs_seen();
  report.best_epoch = stopper.best_epoch();
  report.final_train_loss = eval_loss(train_set);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (checkpoint_dir) {
    save_checkpoint(model, *checkpoint_dir,
                    {{"best_epoch", report.best_epoch}, {"stopping_epoch", report.stopping_epoch}});
    report.checkpoint_path = checkpoint_dir->string();
  }
  return report;
}

}  // namespace netdemix
