#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "netdemix/ddmix.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/grad_check.hpp"
#include "netdemix/training.hpp"

using namespace netdemix;

namespace {

struct Fixture {
  Graph g;
  GraphContext ctx;
  std::vector<Sample> data;
};

Fixture make_fixture(std::size_t n, std::size_t T, std::size_t samples, std::uint64_t seed) {
  Graph g = random_geometric_graph({n, 0.5, 3, seed});
  GraphContext ctx = make_graph_context(g);
  auto data = generate_dataset(g, SIRSParams{}, T, samples, SourceRule{}, seed + 100);
  return {std::move(g), std::move(ctx), std::move(data)};
}

ModelConfig ddmix_config(std::size_t T, std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.kind = ModelKind::DDmix;
  cfg.T = T;
  cfg.seed = seed;
  return cfg;
}


// Zero-initialised biases put ReLU pre-activations of x = 0 nodes exactly on
// the kink; gradient checks are run at a generic point instead.
void jitter_biases(ParameterStore& store, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& name : store.names())
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0)
      for (Index i = 0; i < store.value(name).size(); ++i) store.value(name).data()[i] = 0.1 * rng.normal();
}

}  // namespace

TEST(DDmix, NetworkShapesAndPositiveSigma) {
  auto fx = make_fixture(10, 5, 1, 1);
  DDmix model(ddmix_config(5));
  Tape tape;
  Var x = tape.constant(fx.data[0].obs.x);
  auto p = model.prior(tape, fx.ctx, x);
  auto q = model.posterior(tape, fx.ctx, tape.constant(fx.data[0].traj.Y));
  for (const auto& d : {p, q}) {
    EXPECT_EQ(d.mu.rows(), 10);
    EXPECT_EQ(d.mu.cols(), 5);
    EXPECT_TRUE((d.sigma.value().array() > 0).all());
  }
  Var y_hat = model.deproject(tape, fx.ctx, x, q.mu);
  EXPECT_EQ(y_hat.rows(), 10);
  EXPECT_EQ(y_hat.cols(), 5);
  EXPECT_TRUE((y_hat.value().array() > 0).all() && (y_hat.value().array() < 1).all());
}

TEST(DDmix, WrongShapesRejected) {
  auto fx = make_fixture(6, 4, 1, 2);
  DDmix model(ddmix_config(4));
  Tape tape;
  EXPECT_THROW(model.prior(tape, fx.ctx, tape.constant(Matrix::Zero(5, 1))), DimensionError);
  EXPECT_THROW(model.posterior(tape, fx.ctx, tape.constant(Matrix::Zero(6, 3))), DimensionError);
  EXPECT_THROW(model.deproject(tape, fx.ctx, tape.constant(Matrix::Zero(6, 1)), tape.constant(Matrix::Zero(6, 5))),
               DimensionError);
}

TEST(KlGaussian, IdenticalIsZero) {
  Rng rng(3);
  Matrix mu(4, 3), s(4, 3);
  for (Index i = 0; i < mu.size(); ++i) {
    mu.data()[i] = rng.normal();
    s.data()[i] = 0.1 + rng.uniform();
  }
  EXPECT_LT(std::abs(kl_gaussian(mu, s, mu, s)), 1e-12);
}

TEST(KlGaussian, UnitShiftIsHalfPerEntry) {
  const Matrix ones = Matrix::Ones(3, 4);
  EXPECT_NEAR(kl_gaussian(ones, ones, Matrix::Zero(3, 4), ones), 0.5 * 12, 1e-12);
  Tape tape;
  LatentDistribution q{tape.constant(ones), tape.constant(ones)};
  LatentDistribution p{tape.constant(Matrix::Zero(3, 4)), tape.constant(ones)};
  EXPECT_NEAR(kl_gaussian(q, p).value()(0, 0), 6.0, 1e-12);
}

TEST(KlGaussian, ClosedFormPerEntry) {
  // KL(N(0, 2^2) || N(1, 1)) = ln(1/2) + (4 + 1)/2 - 1/2
  const double expect = std::log(0.5) + 2.5 - 0.5;
  EXPECT_NEAR(kl_gaussian(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1)),
              expect, 1e-12);
}

TEST(KlGaussian, ShapeAndDomainErrors) {
  Tape tape;
  LatentDistribution q{tape.constant(Matrix::Zero(2, 2)), tape.constant(Matrix::Ones(2, 2))};
  LatentDistribution bad{tape.constant(Matrix::Zero(2, 3)), tape.constant(Matrix::Ones(2, 3))};
  LatentDistribution zero{tape.constant(Matrix::Zero(2, 2)), tape.constant(Matrix::Zero(2, 2))};
  EXPECT_THROW(kl_gaussian(q, bad), DimensionError);
  EXPECT_THROW(kl_gaussian(q, zero), DomainError);
}

TEST(KlGaussian, GradientMatchesFiniteDifferences) {
  ParameterStore store;
  Rng rng(4);
  auto rand = [&](double lo) {
    Matrix m(3, 2);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = lo + rng.uniform();
    return m;
  };
  store.add("mq", rand(-0.5));
  store.add("sq", rand(0.3));
  store.add("mp", rand(-0.5));
  store.add("sp", rand(0.3));
  auto report = grad_check(store, [&](Tape& t) {
    return kl_gaussian({t.parameter(store, "mq"), t.parameter(store, "sq")},
                       {t.parameter(store, "mp"), t.parameter(store, "sp")});
  });
  EXPECT_TRUE(report.passed(1e-6)) << report.max_rel_error;
}

TEST(Bce, HalfPredictionGivesLn2) {
  Tape tape;
  Matrix y{{0, 1}, {1, 0}};
  EXPECT_NEAR(bce_loss(tape.constant(Matrix::Constant(2, 2, 0.5)), y).value()(0, 0), std::log(2.0), 1e-12);
}

TEST(Bce, ClampedAtExtremes) {
  Tape tape;
  Matrix y{{1.0}};
  const double v = bce_loss(tape.constant(Matrix::Zero(1, 1)), y).value()(0, 0);
  EXPECT_NEAR(v, -std::log(1e-7), 1e-6);
  EXPECT_TRUE(std::isfinite(v));
}

TEST(Bce, MatchesFormula) {
  Rng rng(5);
  Matrix p(4, 3), y(4, 3);
  for (Index i = 0; i < p.size(); ++i) {
    p.data()[i] = 0.05 + 0.9 * rng.uniform();
    y.data()[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  double acc = 0;
  for (Index i = 0; i < p.size(); ++i)
    acc -= y.data()[i] * std::log(p.data()[i]) + (1 - y.data()[i]) * std::log(1 - p.data()[i]);
  Tape tape;
  EXPECT_NEAR(bce_loss(tape.constant(p), y).value()(0, 0), acc / 12.0, 1e-12);
  EXPECT_THROW(bce_loss(tape.constant(p), Matrix::Zero(3, 3)), DimensionError);
}

TEST(L2Penalty, SumOfSquares) {
  ParameterStore store;
  store.add("a", Matrix{{1.0, -2.0}});
  store.add("b", Matrix{{3.0}});
  Tape tape;
  EXPECT_DOUBLE_EQ(l2_penalty(tape, store).value()(0, 0), 14.0);
}

TEST(LocalityPenalty, IsolatedNodeBecomesInfected) {
  // Two isolated nodes; node 1 goes from 0 to 1 with nothing near it.
  Tape tape;
  Matrix y{{0, 0}, {0, 1}};
  EXPECT_DOUBLE_EQ(locality_penalty(tape.constant(y), Matrix::Zero(2, 2)).value()(0, 0), 1.0);
  Matrix y2{{1, 0}, {0, 1}};
  Matrix a{{0, 1}, {1, 0}};
  EXPECT_DOUBLE_EQ(locality_penalty(tape.constant(y2), a).value()(0, 0), 0.0);
}

TEST(LocalityPenalty, AllOnesIsZeroAndSingleColumn) {
  Graph g = random_geometric_graph({8, 0.4, 3, 1});
  Tape tape;
  EXPECT_DOUBLE_EQ(locality_penalty(tape.constant(Matrix::Ones(8, 5)), g.adjacency()).value()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(locality_penalty(tape.constant(Matrix::Ones(8, 1)), g.adjacency()).value()(0, 0), 0.0);
  EXPECT_THROW(locality_penalty(tape.constant(Matrix::Ones(7, 5)), g.adjacency()), DimensionError);
}

TEST(LocalityPenalty, ZeroOnSimulatedTrajectories) {
  auto fx = make_fixture(20, 8, 30, 6);
  for (const auto& s : fx.data) {
    Tape tape;
    EXPECT_DOUBLE_EQ(locality_penalty(tape.constant(s.traj.Y), fx.g.adjacency()).value()(0, 0), 0.0);
  }
}

TEST(DDmixLoss, IsWeightedSumOfTerms) {
  auto fx = make_fixture(9, 4, 1, 7);
  auto cfg = ddmix_config(4);
  cfg.weights = {2.0, 0.5, 3.0, 1.0};
  DDmix model(cfg);
  Tape tape;
  Rng rng(1);
  auto t = model.loss_terms(tape, fx.ctx, fx.data[0], rng);
  const double expect = t.kl.value()(0, 0) + 2.0 * t.bce.value()(0, 0) + 0.5 * t.l2.value()(0, 0) +
                        3.0 * t.locality.value()(0, 0);
  EXPECT_NEAR(t.total.value()(0, 0), expect, 1e-12);
  EXPECT_GE(t.kl.value()(0, 0), 0.0);
}

TEST(DDmixLoss, FullGradientCheck) {
  auto fx = make_fixture(7, 3, 1, 8);
  DDmix model(ddmix_config(3, 2));
  jitter_biases(model.params(), 4);
  auto report = grad_check(model.params(), [&](Tape& t) {
    Rng rng(11);
    return model.training_loss(t, fx.ctx, fx.data[0], rng, true);
  });
  ASSERT_FALSE(report.near_kink(1e-5)) << report.min_margin;
  EXPECT_TRUE(report.passed(1e-3)) << report.max_rel_error << " at " << report.worst_entry;
}

TEST(DDmix, PermutationEquivariantReconstruction) {
  auto fx = make_fixture(12, 4, 1, 9);
  DDmix model(ddmix_config(4, 3));
  std::vector<NodeId> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  Rng prng(2);
  std::shuffle(perm.begin(), perm.end(), prng.engine());
  std::vector<NodeId> inv(12);
  for (NodeId i = 0; i < 12; ++i) inv[perm[i]] = i;
  std::vector<Edge> edges;
  for (auto [a, b] : fx.g.edges()) edges.emplace_back(inv[a], inv[b]);
  GraphContext pctx = make_graph_context(Graph(12, edges));
  Vector x = fx.data[0].obs.x, px(12);
  for (NodeId i = 0; i < 12; ++i) px(Index(i)) = x(Index(perm[i]));

  // The latent draw is a per-entry noise matrix, so feed the same permuted eps.
  Rng erng(5);
  Matrix eps(12, 4);
  for (Index i = 0; i < eps.size(); ++i) eps.data()[i] = erng.normal();
  Matrix peps(12, 4);
  for (NodeId i = 0; i < 12; ++i) peps.row(Index(i)) = eps.row(Index(perm[i]));

  auto run = [&](const GraphContext& ctx, const Vector& xv, const Matrix& e) {
    Tape tape;
    Var xx = tape.constant(xv);
    auto p = model.prior(tape, ctx, xx);
    return Matrix(model.deproject(tape, ctx, xx, gaussian_sample(p.mu, p.sigma, e)).value());
  };
  Matrix base = run(fx.ctx, x, eps), moved = run(pctx, px, peps);
  for (NodeId i = 0; i < 12; ++i)
    EXPECT_LT((moved.row(Index(i)) - base.row(Index(perm[i]))).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DDmix, ReconstructReplaysAndAveragesDraws) {
  auto fx = make_fixture(10, 4, 1, 10);
  DDmix model(ddmix_config(4, 4));
  Rng a(77), b(77);
  EXPECT_EQ(model.reconstruct(fx.ctx, fx.data[0].obs.x, a), model.reconstruct(fx.ctx, fx.data[0].obs.x, b));
  std::vector<Matrix> draws;
  Rng c(78);
  Matrix mean = model.reconstruct(fx.ctx, fx.data[0].obs.x, c, 3, &draws);
  ASSERT_EQ(draws.size(), 3u);
  EXPECT_TRUE(mean.isApprox((draws[0] + draws[1] + draws[2]) / 3.0, 1e-12));
  Rng d(1);
  EXPECT_THROW(model.reconstruct(fx.ctx, fx.data[0].obs.x, d, 0), InvalidArgument);
}

TEST(DDmix, LossDecreasesUnderAdam) {
  auto fx = make_fixture(12, 5, 4, 11);
  DDmix model(ddmix_config(5, 5));
  OptimizerState state;
  auto batch_loss = [&](bool step) {
    model.params().zero_grad();
    double total = 0;
    for (std::size_t m = 0; m < fx.data.size(); ++m) {
      Tape tape;
      Rng rng(m);
      Var l = model.training_loss(tape, fx.ctx, fx.data[m], rng, true);
      total += l.value()(0, 0);
      if (step) tape.backward(l, 1.0 / double(fx.data.size()));
    }
    if (step) adam_step(model.params(), state, AdamSettings{});
    return total / double(fx.data.size());
  };
  const double before = batch_loss(false);
  for (int i = 0; i < 50; ++i) batch_loss(true);
  EXPECT_LT(batch_loss(false), before);
}
