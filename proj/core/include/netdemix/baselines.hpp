#pragma once

#include <vector>

#include "netdemix/model.hpp"

namespace netdemix {

/// Fully connected: x -> {NT/4, NT/4, NT} ReLU hidden layers -> NT linear
/// output, read column-major into N x T, then sigmoid. Bound to one N.
class MLPBaseline final : public Model {
 public:
  explicit MLPBaseline(ModelConfig cfg);

  /// {ceil(NT/4), ceil(NT/4), NT, NT}
  std::vector<Index> layer_widths() const;

  Var forward(Tape& tape, const Vector& x);

  void check_graph(const GraphContext& ctx) const override;
  Var training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng,
                    bool training) override;
  Matrix predict(const GraphContext& ctx, const Vector& x, Rng& rng) override;
  nlohmann::json describe() const override;
};

/// 1-D convolutions along the node index: channels 1 -> ceil(T/4) -> ceil(T/2)
/// -> T, kernel 3, stride 1, zero padding 1, ReLU between stages, sigmoid out.
class CNNNodesBaseline final : public Model {
 public:
  explicit CNNNodesBaseline(ModelConfig cfg);

  std::vector<Index> channel_plan() const;
  Var forward(Tape& tape, const Vector& x);

  Var training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng,
                    bool training) override;
  Matrix predict(const GraphContext& ctx, const Vector& x, Rng& rng) override;
  nlohmann::json describe() const override;
};

/// Default upsampling plan taking length 1 to length T in six blocks:
/// stride-2 doublings (kernel 2) while they fit, one stride-1 block whose
/// kernel closes the gap to T, then stride-1 kernel-3 padding-1 refinements.
std::vector<TransposedBlockSpec> default_cnn_time_plan(std::size_t T);
/// Output length after applying `plan` to a length-1 input.
Index plan_output_length(const std::vector<TransposedBlockSpec>& plan);

/// Per-node temporal decoder: x_i -> six transposed-conv/BN/ReLU blocks ->
/// pointwise output channel -> sigmoid. Nodes never interact except through
/// batch statistics in training mode.
class CNNTimeBaseline final : public Model {
 public:
  explicit CNNTimeBaseline(ModelConfig cfg);
  CNNTimeBaseline(ModelConfig cfg, std::vector<TransposedBlockSpec> plan);

  const std::vector<TransposedBlockSpec>& plan() const noexcept { return plan_; }
  Var forward(Tape& tape, const Vector& x, bool training);

  Var training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng,
                    bool training) override;
  Matrix predict(const GraphContext& ctx, const Vector& x, Rng& rng) override;
  nlohmann::json describe() const override;

 private:
  std::vector<TransposedBlockSpec> plan_;
};

}  // namespace netdemix
