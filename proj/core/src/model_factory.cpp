#include <algorithm>
#include <array>
#include <cmath>

#include "netdemix/baselines.hpp"
#include "netdemix/ddmix.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/model.hpp"

namespace netdemix {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::DDmix: return "ddmix";
    case ModelKind::MLP: return "mlp";
    case ModelKind::CNNNodes: return "cnn-nodes";
    case ModelKind::CNNTime: return "cnn-time";
  }
  return "unknown";
}

std::string model_type_name(ModelKind kind) {
  auto s = to_string(kind);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

ModelKind parse_model_kind(const std::string& s) {
  std::string k = s;
  std::replace(k.begin(), k.end(), '_', '-');
  for (auto kind : {ModelKind::DDmix, ModelKind::MLP, ModelKind::CNNNodes, ModelKind::CNNTime})
    if (to_string(kind) == k) return kind;
  throw InvalidArgument("unknown model '" + s + "' (expected ddmix, mlp, cnn-nodes or cnn-time)");
}

void LossWeights::validate() const {
  if (!(eta1 >= 0 && eta2 >= 0 && eta3 >= 0)) throw InvalidArgument("loss weights must be >= 0");
}

void Model::check_graph(const GraphContext& ctx) const {
  if (cfg_.kind == ModelKind::DDmix && ctx.connectivity != cfg_.pool)
    throw InvalidArgument("graph context pooling connectivity '" + to_string(ctx.connectivity) +
                          "' differs from the model's '" + to_string(cfg_.pool) + "'");
}

nlohmann::json Model::describe() const {
  return {{"model_type", model_type_name(cfg_.kind)},
          {"T", cfg_.T},
          {"num_nodes", cfg_.num_nodes},
          {"seed", cfg_.seed}};
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg) {
  switch (cfg.kind) {
    case ModelKind::DDmix: return std::make_unique<DDmix>(cfg);
    case ModelKind::MLP: return std::make_unique<MLPBaseline>(cfg);
    case ModelKind::CNNNodes: return std::make_unique<CNNNodesBaseline>(cfg);
    case ModelKind::CNNTime: return std::make_unique<CNNTimeBaseline>(cfg);
  }
  throw InvalidArgument("unknown model kind");
}

Var bce_loss(Var y_hat, const Matrix& y) {
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols())
    throw DimensionError("bce_loss: prediction and target shapes differ");
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  const Matrix& p = y_hat.value();
  const double count = double(p.size());
  double total = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    const double c = std::clamp(p(k), lo, hi);
    total -= y(k) * std::log(c) + (1.0 - y(k)) * std::log(1.0 - c);
  }
  const std::array in{y_hat};
  return y_hat.tape()->record(Matrix::Constant(1, 1, total / count), in,
                              [y_hat, y, count](Tape& t, const Matrix& g) {
                                const Matrix& p = y_hat.value();
                                Matrix d(p.rows(), p.cols());
                                for (Index k = 0; k < p.size(); ++k) {
                                  const double v = p(k);
                                  d(k) = (v < lo || v > hi)
                                             ? 0.0
                                             : g(0, 0) * (-y(k) / v + (1.0 - y(k)) / (1.0 - v)) / count;
                                }
                                t.accumulate(y_hat, d);
                              });
}

Var l2_penalty(Tape& tape, ParameterStore& store) {
  Var total;
  for (const auto& name : store.names()) {
    Var term = ops::sum(ops::square(tape.parameter(store, name)));
    total = total.valid() ? ops::add(total, term) : term;
  }
  if (!total.valid()) return tape.constant(Matrix::Zero(1, 1));
  return total;
}

}  // namespace netdemix
