#include "netdemix/ddmix.hpp"

#include <array>
#include <cmath>

#include "netdemix/errors.hpp"

namespace netdemix {

Var kl_gaussian(const LatentDistribution& q, const LatentDistribution& p) {
  const Var vars[] = {q.mu, q.sigma, p.mu, p.sigma};
  for (const Var& v : vars)
    if (v.rows() != q.mu.rows() || v.cols() != q.mu.cols())
      throw DimensionError("kl_gaussian: distribution shapes differ");
  const Matrix& sq = q.sigma.value();
  const Matrix& sp = p.sigma.value();
  if ((sq.array() <= 0.0).any() || (sp.array() <= 0.0).any())
    throw DomainError("kl_gaussian: sigma must be > 0");

  const double value = kl_gaussian(q.mu.value(), sq, p.mu.value(), sp);
  const std::array in{q.mu, q.sigma, p.mu, p.sigma};
  return q.mu.tape()->record(Matrix::Constant(1, 1, value), in, [q, p](Tape& t, const Matrix& g) {
    const double s = g(0, 0);
    const Eigen::ArrayXXd sq = q.sigma.value().array();
    const Eigen::ArrayXXd sp = p.sigma.value().array();
    const Eigen::ArrayXXd d = q.mu.value().array() - p.mu.value().array();
    const Eigen::ArrayXXd sp2 = sp.square();
    t.accumulate(q.mu, (s * d / sp2).matrix());
    t.accumulate(p.mu, (-s * d / sp2).matrix());
    t.accumulate(q.sigma, (s * (sq / sp2 - 1.0 / sq)).matrix());
    t.accumulate(p.sigma, (s * (1.0 / sp - (sq.square() + d.square()) / (sp2 * sp))).matrix());
  });
}

double kl_gaussian(const Matrix& mu_q, const Matrix& sigma_q, const Matrix& mu_p,
                   const Matrix& sigma_p) {
  const auto sq = sigma_q.array();
  const auto sp = sigma_p.array();
  const auto d = mu_q.array() - mu_p.array();
  return ((sp / sq).log() + (sq.square() + d.square()) / (2.0 * sp.square()) - 0.5).sum();
}

Var locality_penalty(Var y_hat, const Matrix& adjacency) {
  const Index n = y_hat.rows();
  if (adjacency.rows() != n || adjacency.cols() != n)
    throw DimensionError("locality_penalty: adjacency does not match node count");
  Tape& tape = *y_hat.tape();
  const Index T = y_hat.cols();
  if (T < 2) return ops::scale(ops::sum(y_hat), 0.0);
  Var closed = tape.constant(adjacency + Matrix::Identity(n, n));
  Var cur = ops::slice_cols(y_hat, 1, T - 1);
  Var prev = ops::slice_cols(y_hat, 0, T - 1);
  return ops::sum(ops::positive_part(ops::sub(cur, ops::matmul(closed, prev))));
}

DDmix::DDmix(ModelConfig cfg) : Model(std::move(cfg)) {
  cfg_.weights.validate();
  const Index T = Index(cfg_.T);
  if (T < 1) throw InvalidArgument("DDmix: T must be >= 1");
  auto add_head = [&](const std::string& name) {
    auto rng = params_.init_rng(name + ".W");
    params_.add(name + ".W", glorot_uniform(T, T, rng));
    params_.add(name + ".b", Matrix::Zero(1, T));
  };
  register_gunet_block(params_, "phi.unet", 1, T);
  add_head("phi.mu");
  add_head("phi.log_sigma");
  register_gunet_block(params_, "psi.unet", T, T);
  add_head("psi.mu");
  add_head("psi.log_sigma");
  register_gunet_block(params_, "theta.unet_x", 1, T);
  register_gunet_block(params_, "theta.unet_out", 2 * T, T);
}

LatentDistribution DDmix::latent_head(Tape& tape, const GraphContext& ctx,
                                      const std::string& prefix, Var features) {
  Var a = tape.constant(ctx.operand.normalized);
  auto head = [&](const std::string& name) {
    return gcn_layer(a, features, tape.parameter(params_, prefix + name + ".W"),
                     tape.parameter(params_, prefix + name + ".b"), Activation::Identity);
  };
  Var mu = head(".mu");
  Var sigma = ops::exp(head(".log_sigma"));
  return {mu, sigma};
}

LatentDistribution DDmix::prior(Tape& tape, const GraphContext& ctx, Var x) {
  if (x.rows() != ctx.num_nodes() || x.cols() != 1)
    throw DimensionError("prior_network: x must be N x 1");
  Var h = gunet_block(tape, params_, "phi.unet", ctx.operand, x);
  return latent_head(tape, ctx, "phi", h);
}

LatentDistribution DDmix::posterior(Tape& tape, const GraphContext& ctx, Var y) {
  if (y.rows() != ctx.num_nodes() || y.cols() != Index(cfg_.T))
    throw DimensionError("posterior_network: Y must be N x T");
  Var h = gunet_block(tape, params_, "psi.unet", ctx.operand, y);
  return latent_head(tape, ctx, "psi", h);
}

Var DDmix::deproject(Tape& tape, const GraphContext& ctx, Var x, Var z) {
  if (x.rows() != ctx.num_nodes() || x.cols() != 1)
    throw DimensionError("deprojection: x must be N x 1");
  if (z.rows() != ctx.num_nodes() || z.cols() != Index(cfg_.T))
    throw DimensionError("deprojection: z must be N x T");
  Var hx = gunet_block(tape, params_, "theta.unet_x", ctx.operand, x);
  Var joint = ops::concat_cols(hx, z);
  Var out = gunet_block(tape, params_, "theta.unet_out", ctx.operand, joint);
  return ops::sigmoid(out);
}

DDmix::LossTerms DDmix::loss_terms(Tape& tape, const GraphContext& ctx, const Sample& sample,
                                   Rng& rng) {
  check_graph(ctx);
  if (sample.traj.Y.rows() != ctx.num_nodes() || sample.traj.Y.cols() != Index(cfg_.T))
    throw DimensionError("ddmix_loss: Y must be N x T");
  Var x = tape.constant(sample.obs.x);
  Var y = tape.constant(sample.traj.Y);
  LatentDistribution q = posterior(tape, ctx, y);
  LatentDistribution p = prior(tape, ctx, x);
  Var z = gaussian_sample(q.mu, q.sigma, rng);
  Var y_hat = deproject(tape, ctx, x, z);

  LossTerms terms;
  terms.kl = kl_gaussian(q, p);
  terms.bce = bce_loss(y_hat, sample.traj.Y);
  terms.l2 = l2_penalty(tape, params_);
  terms.locality = locality_penalty(y_hat, ctx.adjacency);
  const auto& w = cfg_.weights;
  terms.total = ops::add(ops::add(terms.kl, ops::scale(terms.bce, w.eta1)),
                         ops::add(ops::scale(terms.l2, w.eta2), ops::scale(terms.locality, w.eta3)));
  return terms;
}

Var DDmix::training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng, bool) {
  return loss_terms(tape, ctx, sample, rng).total;
}

Matrix DDmix::reconstruct(const GraphContext& ctx, const Vector& x, Rng& rng, std::size_t num_draws,
                          std::vector<Matrix>* draws) {
  check_graph(ctx);
  if (num_draws < 1) throw InvalidArgument("reconstruct: num_draws must be >= 1");
  auto single = [&](Rng& r) {
    Tape tape;
    Var xv = tape.constant(x);
    LatentDistribution p = prior(tape, ctx, xv);
    Var z = gaussian_sample(p.mu, p.sigma, r);
    return Matrix(deproject(tape, ctx, xv, z).value());
  };
  if (num_draws == 1) {
    Matrix y = single(rng);
    if (draws) draws->push_back(y);
    return y;
  }
  Matrix acc = Matrix::Zero(ctx.num_nodes(), Index(cfg_.T));
  for (std::size_t k = 0; k < num_draws; ++k) {
    Rng sub = rng.split(k);
    Matrix y = single(sub);
    acc += y;
    if (draws) draws->push_back(std::move(y));
  }
  return acc / double(num_draws);
}

Matrix DDmix::predict(const GraphContext& ctx, const Vector& x, Rng& rng) {
  return reconstruct(ctx, x, rng, 1);
}

nlohmann::json DDmix::describe() const {
  auto j = Model::describe();
  const auto T = cfg_.T;
  j["feature_widths"] = {{"prior", {1, T, T}},
                         {"posterior", {T, T, T}},
                         {"deprojection", {1, T, 2 * T, T}}};
  j["pool_connectivity"] = to_string(cfg_.pool);
  j["loss_weights"] = {{"eta1", cfg_.weights.eta1},
                       {"eta2", cfg_.weights.eta2},
                       {"eta3", cfg_.weights.eta3},
                       {"sigma_y_sq", cfg_.weights.sigma_y_sq}};
  return j;
}

}  // namespace netdemix
