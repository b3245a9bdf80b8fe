#include "netdemix/metrics.hpp"


#include <algorithm>
#include <numeric>

#include "netdemix/ddmix.hpp"
#include "netdemix/errors.hpp"

namespace netdemix {

double evaluate_mse(const Matrix& y_hat, const Matrix& y) {
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols())
    throw DimensionError("evaluate_mse: shapes differ");
  if (y.size() == 0) throw DimensionError("evaluate_mse: empty matrices");
  return (y - y_hat).squaredNorm() / double(y.size());
}

bool SourceRanking::hit(const std::string& true_class, std::size_t k) const {
  const std::size_t n = std::min(k, ranked_classes.size());
  return std::find(ranked_classes.begin(), ranked_classes.begin() + std::ptrdiff_t(n), true_class) !=
         ranked_classes.begin() + std::ptrdiff_t(n);
}

SourceRanking source_class_topk(const Matrix& y_hat, std::span<const std::string> class_map) {
  if (class_map.empty()) throw InvalidArgument("source_class_topk: empty class map");
  if (Index(class_map.size()) != y_hat.rows())
    throw DimensionError("source_class_topk: class map must label every node");
  if (y_hat.cols() < 1) throw DimensionError("source_class_topk: no time steps");

  SourceRanking r;
  const Eigen::RowVectorXd col_max = y_hat.colwise().maxCoeff();
  Index t = 0;
  for (; t < col_max.size(); ++t)
    if (col_max(t) > 0.5) break;
  if (t == col_max.size()) {
    r.fallback = true;
    col_max.maxCoeff(&t);  // first maximal column
  }
  r.t_prime = std::size_t(t);

  std::map<std::string, double> best;
  for (std::size_t i = 0; i < class_map.size(); ++i) {
    const double v = y_hat(Index(i), t);
    auto [it, inserted] = best.emplace(class_map[i], v);
    if (!inserted) it->second = std::max(it->second, v);
  }
  std::vector<std::pair<std::string, double>> ranked(best.begin(), best.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [cls, score] : ranked) {
    r.ranked_classes.push_back(cls);
    r.scores.push_back(score);
  }
  return r;
}

MetricsReport evaluate_model(Model& model, const GraphContext& ctx, std::span<const Sample> test,
                             const EvaluationOptions& opts) {
  if (test.empty()) throw InvalidArgument("evaluate_model: empty test set");
  model.check_graph(ctx);
  MetricsReport rep;
  rep.model = to_string(model.kind());
  rep.graph = ctx.id;
  rep.num_nodes = std::size_t(ctx.num_nodes());
  rep.T = model.horizon();
  rep.seed = opts.seed;

  std::map<std::size_t, std::size_t> hits;
  const Rng base(opts.seed);
  for (std::size_t m = 0; m < test.size(); ++m) {
    Rng rng = base.split(m);
    Matrix y_hat;
    if (auto* dd = dynamic_cast<DDmix*>(&model); dd && opts.num_draws > 1)
      y_hat = dd->reconstruct(ctx, test[m].obs.x, rng, opts.num_draws);
    else
      y_hat = model.predict(ctx, test[m].obs.x, rng);
    rep.per_sample_mse.push_back(evaluate_mse(y_hat, test[m].traj.Y));
    if (opts.classes) {
      if (test[m].source.empty()) throw InvalidArgument("evaluate_model: sample without source");
      const auto ranking = source_class_topk(y_hat, *opts.classes);
      const auto& truth = (*opts.classes)[test[m].source.front()];
      for (std::size_t k : opts.ks) hits[k] += ranking.hit(truth, k);
    }
  }
  rep.mse = std::accumulate(rep.per_sample_mse.begin(), rep.per_sample_mse.end(), 0.0) /
            double(rep.per_sample_mse.size());
  for (const auto& [k, h] : hits) rep.topk_accuracy[k] = double(h) / double(test.size());
  return rep;
}

}  // namespace netdemix
