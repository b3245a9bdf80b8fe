#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "netdemix/layers.hpp"
#include "netdemix/params.hpp"
#include "netdemix/sirs.hpp"
#include "netdemix/tape.hpp"

namespace netdemix {

enum class ModelKind { DDmix, MLP, CNNNodes, CNNTime };

/// CLI spelling: ddmix, mlp, cnn-nodes, cnn-time.
std::string to_string(ModelKind kind);
/// Checkpoint spelling: ddmix, mlp, cnn_nodes, cnn_time.
std::string model_type_name(ModelKind kind);
/// Accepts either spelling.
ModelKind parse_model_kind(const std::string& s);

/// Weights of the compound DDmix objective.
struct LossWeights {
  double eta1 = 1.0;     ///< reconstruction (BCE)
  double eta2 = 1e-6;    ///< L2 on all parameters
  double eta3 = 1.0;     ///< locality penalty
  /// Output-noise variance of the Gaussian decoder. Not used by the
  /// optimised loss (BCE replaces the Gaussian likelihood); kept as metadata.
  double sigma_y_sq = 1.0;

  void validate() const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::DDmix;
  /// Node count the model is built for; only the MLP depends on it.
  std::size_t num_nodes = 0;
  std::size_t T = 20;
  std::uint64_t seed = 0;
  LossWeights weights;
  PoolConnectivity pool = PoolConnectivity::Squared;
};

/// Common surface of DDmix and the baselines.
class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)), params_(cfg_.seed) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  ModelKind kind() const noexcept { return cfg_.kind; }
  std::size_t horizon() const noexcept { return cfg_.T; }

  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  /// Throws CapabilityError when the model cannot run on this graph.
  virtual void check_graph(const GraphContext& ctx) const;

  /// Records the per-sample training objective on `tape`. `training`
  /// selects batch-statistics mode for layers that have one.
  virtual Var training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng,
                            bool training) = 0;

  /// Reconstruction N x T with entries in (0, 1).
  virtual Matrix predict(const GraphContext& ctx, const Vector& x, Rng& rng) = 0;

  /// Architecture details for the checkpoint manifest.
  virtual nlohmann::json describe() const;

 protected:
  ModelConfig cfg_;
  ParameterStore params_;
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg);

/// Mean over N x T of the binary cross entropy with probabilities clamped to
/// [1e-7, 1 - 1e-7].
Var bce_loss(Var y_hat, const Matrix& y);

/// Sum over every parameter entry of its square.
Var l2_penalty(Tape& tape, ParameterStore& store);

}  // namespace netdemix
