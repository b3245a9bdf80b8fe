#include "netdemix/baselines.hpp"

#include <algorithm>

#include "netdemix/errors.hpp"

namespace netdemix {

namespace {

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

void check_sample(const GraphContext& ctx, const Sample& s, std::size_t T) {
  if (s.obs.x.size() != ctx.num_nodes() || s.traj.Y.rows() != ctx.num_nodes() ||
      s.traj.Y.cols() != Index(T))
    throw DimensionError("sample shape does not match graph and horizon");
}

}  // namespace

// ---------------------------------------------------------------- MLP

MLPBaseline::MLPBaseline(ModelConfig cfg) : Model(std::move(cfg)) {
  if (cfg_.num_nodes < 1 || cfg_.T < 1) throw InvalidArgument("MLP: N and T must be >= 1");
  Index fan_in = Index(cfg_.num_nodes);
  const auto widths = layer_widths();
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string name = "mlp.l" + std::to_string(l + 1);
    auto rng = params_.init_rng(name + ".W");
    params_.add(name + ".W", glorot_uniform(fan_in, widths[l], rng));
    params_.add(name + ".b", Matrix::Zero(1, widths[l]));
    fan_in = widths[l];
  }
}

std::vector<Index> MLPBaseline::layer_widths() const {
  const Index nt = Index(cfg_.num_nodes * cfg_.T);
  return {ceil_div(nt, 4), ceil_div(nt, 4), nt, nt};
}

void MLPBaseline::check_graph(const GraphContext& ctx) const {
  if (std::size_t(ctx.num_nodes()) != cfg_.num_nodes)
    throw CapabilityError("MLP was built for N=" + std::to_string(cfg_.num_nodes) +
                          " and cannot handle a graph with N=" + std::to_string(ctx.num_nodes()));
}

Var MLPBaseline::forward(Tape& tape, const Vector& x) {
  if (std::size_t(x.size()) != cfg_.num_nodes)
    throw CapabilityError("MLP was built for N=" + std::to_string(cfg_.num_nodes) +
                          ", got input of length " + std::to_string(x.size()));
  Var h = tape.constant(x.transpose());
  const std::size_t layers = layer_widths().size();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = "mlp.l" + std::to_string(l + 1);
    const auto act = l + 1 < layers ? Activation::Relu : Activation::Identity;
    h = dense_layer(h, tape.parameter(params_, name + ".W"), tape.parameter(params_, name + ".b"), act);
  }
  return ops::sigmoid(ops::reshape(h, Index(cfg_.num_nodes), Index(cfg_.T)));
}

Var MLPBaseline::training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng&, bool) {
  check_graph(ctx);
  check_sample(ctx, sample, cfg_.T);
  return bce_loss(forward(tape, sample.obs.x), sample.traj.Y);
}

Matrix MLPBaseline::predict(const GraphContext& ctx, const Vector& x, Rng&) {
  check_graph(ctx);
  Tape tape;
  return forward(tape, x).value();
}

nlohmann::json MLPBaseline::describe() const {
  auto j = Model::describe();
  j["layer_widths"] = layer_widths();
  return j;
}

// ---------------------------------------------------------------- CNN-nodes

CNNNodesBaseline::CNNNodesBaseline(ModelConfig cfg) : Model(std::move(cfg)) {
  if (cfg_.T < 1) throw InvalidArgument("CNN-nodes: T must be >= 1");
  const auto plan = channel_plan();
  for (std::size_t s = 0; s + 1 < plan.size(); ++s) {
    const std::string name = "cnn_nodes.conv" + std::to_string(s + 1);
    auto rng = params_.init_rng(name + ".K");
    const Matrix w = glorot_uniform(plan[s] * 3, plan[s + 1], rng);
    params_.add(name + ".K", w.transpose());
    params_.add(name + ".b", Matrix::Zero(1, plan[s + 1]));
  }
}

std::vector<Index> CNNNodesBaseline::channel_plan() const {
  const Index T = Index(cfg_.T);
  return {1, ceil_div(T, 4), ceil_div(T, 2), T};
}

Var CNNNodesBaseline::forward(Tape& tape, const Vector& x) {
  if (x.size() < 1) throw DimensionError("CNN-nodes: empty input");
  Var h = tape.constant(x);
  const std::size_t stages = channel_plan().size() - 1;
  for (std::size_t s = 0; s < stages; ++s) {
    const std::string name = "cnn_nodes.conv" + std::to_string(s + 1);
    h = conv1d(h, tape.parameter(params_, name + ".K"), tape.parameter(params_, name + ".b"), 3, 1);
    if (s + 1 < stages) h = ops::relu(h);
  }
  return ops::sigmoid(h);
}

Var CNNNodesBaseline::training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng&,
                                    bool) {
  check_sample(ctx, sample, cfg_.T);
  return bce_loss(forward(tape, sample.obs.x), sample.traj.Y);
}

Matrix CNNNodesBaseline::predict(const GraphContext&, const Vector& x, Rng&) {
  Tape tape;
  return forward(tape, x).value();
}

nlohmann::json CNNNodesBaseline::describe() const {
  auto j = Model::describe();
  j["channel_plan"] = channel_plan();
  j["kernel_size"] = 3;
  j["padding"] = 1;
  return j;
}

// ---------------------------------------------------------------- CNN-time

std::vector<TransposedBlockSpec> default_cnn_time_plan(std::size_t T) {
  if (T < 1) throw InvalidArgument("CNN-time: T must be >= 1");
  constexpr std::size_t kBlocks = 6;
  const Index channels[kBlocks] = {16, 16, 16, 16, 8, 8};
  std::vector<TransposedBlockSpec> plan;
  Index len = 1;
  Index in = 1;
  auto push = [&](Index k, Index s, Index p) {
    const Index out = channels[plan.size()];
    plan.push_back({in, out, k, s, p});
    len = conv_transpose_length(len, s, k, p);
    in = out;
  };
  while (plan.size() < kBlocks - 1 && 2 * len <= Index(T)) push(2, 2, 0);
  if (len < Index(T)) push(Index(T) - len + 1, 1, 0);
  while (plan.size() < kBlocks) push(3, 1, 1);
  if (len != Index(T))
    throw InvalidArgument("CNN-time: cannot reach T=" + std::to_string(T) + " in six blocks");
  return plan;
}

Index plan_output_length(const std::vector<TransposedBlockSpec>& plan) {
  Index len = 1;
  for (const auto& b : plan) len = conv_transpose_length(len, b.stride, b.kernel_size, b.padding);
  return len;
}

CNNTimeBaseline::CNNTimeBaseline(ModelConfig cfg)
    : CNNTimeBaseline(cfg, default_cnn_time_plan(cfg.T)) {}

CNNTimeBaseline::CNNTimeBaseline(ModelConfig cfg, std::vector<TransposedBlockSpec> plan)
    : Model(std::move(cfg)), plan_(std::move(plan)) {
  if (plan_.empty()) throw InvalidArgument("CNN-time: empty plan");
  if (plan_.front().in_channels != 1) throw InvalidArgument("CNN-time: first block must take 1 channel");
  for (std::size_t b = 1; b < plan_.size(); ++b)
    if (plan_[b].in_channels != plan_[b - 1].out_channels)
      throw InvalidArgument("CNN-time: channel counts of consecutive blocks disagree");
  if (plan_output_length(plan_) != Index(cfg_.T))
    throw InvalidArgument("CNN-time: plan produces length " + std::to_string(plan_output_length(plan_)) +
                          ", expected T=" + std::to_string(cfg_.T));
  for (std::size_t b = 0; b < plan_.size(); ++b)
    register_transposed_block(params_, "cnn_time.block" + std::to_string(b + 1), plan_[b]);
  auto rng = params_.init_rng("cnn_time.head.W");
  params_.add("cnn_time.head.W", glorot_uniform(plan_.back().out_channels, 1, rng));
  params_.add("cnn_time.head.b", Matrix::Zero(1, 1));
}

Var CNNTimeBaseline::forward(Tape& tape, const Vector& x, bool training) {
  if (x.size() < 1) throw DimensionError("CNN-time: empty input");
  Var h = tape.constant(x);  // N x (1 channel * length 1)
  for (std::size_t b = 0; b < plan_.size(); ++b)
    h = conv1d_transposed_block(tape, params_, "cnn_time.block" + std::to_string(b + 1), plan_[b], h,
                                training);
  h = conv_transpose1d(h, tape.parameter(params_, "cnn_time.head.W"),
                       tape.parameter(params_, "cnn_time.head.b"), plan_.back().out_channels, 1, 1, 0);
  return ops::sigmoid(h);
}

Var CNNTimeBaseline::training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng&,
                                   bool training) {
  check_sample(ctx, sample, cfg_.T);
  return bce_loss(forward(tape, sample.obs.x, training), sample.traj.Y);
}

Matrix CNNTimeBaseline::predict(const GraphContext&, const Vector& x, Rng&) {
  Tape tape;
  return forward(tape, x, false).value();
}

nlohmann::json CNNTimeBaseline::describe() const {
  auto j = Model::describe();
  auto plan = nlohmann::json::array();
  for (const auto& b : plan_)
    plan.push_back({{"in_channels", b.in_channels},
                    {"out_channels", b.out_channels},
                    {"kernel_size", b.kernel_size},
                    {"stride", b.stride},
                    {"padding", b.padding}});
  j["plan"] = std::move(plan);
  return j;
}

}  // namespace netdemix
