#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdemix/model.hpp"

namespace netdemix {

/// (1 / NT) * ||Y - Y_hat||_F^2 on raw probabilities.
double evaluate_mse(const Matrix& y_hat, const Matrix& y);

struct SourceRanking {
  /// 0-based first step whose largest prediction exceeds 0.5.
  std::size_t t_prime = 0;
  /// True when no prediction exceeded 0.5 and t_prime is the step holding
  /// the overall largest prediction.
  bool fallback = false;
  /// Classes by descending score at t_prime, ties by ascending label.
  std::vector<std::string> ranked_classes;
  std::vector<double> scores;

  /// True iff `true_class` is among the first k ranked classes.
  bool hit(const std::string& true_class, std::size_t k) const;
};

/// Ranks classes by max_{i in class} Y_hat(i, t_prime).
SourceRanking source_class_topk(const Matrix& y_hat, std::span<const std::string> class_map);

struct MetricsReport {
  std::string experiment;
  std::string model;
  std::string graph;
  std::size_t num_nodes = 0;
  std::size_t T = 0;
  double density_mult = 1.0;
  std::size_t train_samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_sample_mse;
  double mse = 0.0;
  /// k -> mean top-k source-class hit rate; empty when classes are unknown.
  std::map<std::size_t, double> topk_accuracy;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
};

struct EvaluationOptions {
  std::uint64_t seed = 0;
  /// Node classes; enables source-class accuracy when set.
  std::optional<std::vector<std::string>> classes;
  std::vector<std::size_t> ks = {1, 3, 5};
  /// DDmix reconstructions average this many prior draws; other models ignore it.
  std::size_t num_draws = 1;
};

/// Reconstructs every sample (substream m of opts.seed for sample m) and
/// fills per-sample MSE, mean MSE and, with classes, top-k accuracies.
MetricsReport evaluate_model(Model& model, const GraphContext& ctx, std::span<const Sample> test,
                             const EvaluationOptions& opts);

}  // namespace netdemix
