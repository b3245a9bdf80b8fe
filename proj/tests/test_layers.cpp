#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "netdemix/errors.hpp"
#include "netdemix/grad_check.hpp"
#include "netdemix/layers.hpp"

using namespace netdemix;

namespace {

Matrix random_matrix(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

GraphOperand operand_of(const Graph& g, PoolConnectivity c = PoolConnectivity::Squared) {
  return make_graph_context(g, c).operand;
}

Matrix permutation_matrix(const std::vector<Index>& perm) {
  // (P h)(i) = h(perm[i])
  const Index n = Index(perm.size());
  Matrix p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) p(i, perm[std::size_t(i)]) = 1.0;
  return p;
}

}  // namespace

TEST(Gcn, IdentityCase) {
  Tape tape;
  Matrix h0{{1.0, 2.0}, {0.0, 3.0}};
  Var out = gcn_layer(tape.constant(Matrix::Identity(2, 2)), tape.constant(h0),
                      tape.constant(Matrix::Identity(2, 2)), Activation::Relu);
  EXPECT_EQ(out.value(), h0);
}

TEST(Gcn, ZeroInputGivesZero) {
  Tape tape;
  Rng rng(1);
  Var out = gcn_layer(tape.constant(Matrix::Identity(3, 3)), tape.constant(Matrix::Zero(3, 2)),
                      tape.constant(random_matrix(2, 4, rng)), Activation::Relu);
  EXPECT_EQ(out.value(), Matrix::Zero(3, 4));
}

TEST(Gcn, MatchesDenseOracle) {
  Rng rng(2);
  Graph g = random_geometric_graph({6, 0.6, 3, 4});
  const Matrix a = normalize_adjacency(g).matrix;
  const Matrix h0 = random_matrix(6, 3, rng), w = random_matrix(3, 5, rng), b = random_matrix(1, 5, rng);
  Tape tape;
  Var out = gcn_layer(tape.constant(a), tape.constant(h0), tape.constant(w), Activation::Relu);
  Var outb = gcn_layer(tape.constant(a), tape.constant(h0), tape.constant(w), tape.constant(b), Activation::Identity);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 5; ++j) {
      double acc = 0;
      for (Index k = 0; k < 6; ++k)
        for (Index f = 0; f < 3; ++f) acc += a(i, k) * h0(k, f) * w(f, j);
      EXPECT_NEAR(out.value()(i, j), std::max(acc, 0.0), 1e-12);
      EXPECT_NEAR(outb.value()(i, j), acc + b(0, j), 1e-12);
    }
}

TEST(Gcn, ShapeMismatch) {
  Tape tape;
  EXPECT_THROW(gcn_layer(tape.constant(Matrix::Identity(3, 3)), tape.constant(Matrix::Ones(3, 2)),
                         tape.constant(Matrix::Ones(3, 2)), Activation::Relu),
               DimensionError);
}

TEST(Gcn, PermutationEquivariance) {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g = random_geometric_graph({12, 0.5, 3, std::uint64_t(rep)});
    const Matrix a = normalize_adjacency(g).matrix;
    std::vector<Index> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const Matrix p = permutation_matrix(perm);
    const Matrix h0 = random_matrix(12, 3, rng), w = random_matrix(3, 4, rng);
    Tape tape;
    Matrix lhs = gcn_layer(tape.constant(p * a * p.transpose()), tape.constant(p * h0), tape.constant(w),
                           Activation::Relu)
                     .value();
    Matrix rhs = p * gcn_layer(tape.constant(a), tape.constant(h0), tape.constant(w), Activation::Relu).value();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(GPool, DirectFormula) {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}});
  Tape tape;
  Matrix h{{4, 0}, {3, 1}, {2, 5}, {1, -2}};
  Var p = tape.constant(Matrix{{1}, {0}});
  auto out = gpool(operand_of(g), tape.constant(h), p, 2);
  EXPECT_EQ(out.record.selected, (std::vector<Index>{0, 1}));
  EXPECT_EQ(out.record.parent_size, 4);
  EXPECT_NEAR(out.h.value()(0, 0), 4 * sigmoid(4), 1e-15);
  EXPECT_NEAR(out.h.value()(1, 1), 1 * sigmoid(3), 1e-15);
  EXPECT_EQ(out.graph.num_nodes(), 2);
}

TEST(GPool, TiesGoToLowerIndex) {
  Graph g(4, {{0, 1}, {2, 3}});
  Tape tape;
  auto out = gpool(operand_of(g), tape.constant(Matrix::Ones(4, 2)), tape.constant(Matrix{{1}, {1}}), 2);
  EXPECT_EQ(out.record.selected, (std::vector<Index>{0, 1}));
}

TEST(GPool, KeepAllGatesEveryRow) {
  Rng rng(6);
  Graph g = random_geometric_graph({7, 0.5, 3, 1});
  const Matrix h = random_matrix(7, 3, rng), p = random_matrix(3, 1, rng);
  Tape tape;
  auto out = gpool(operand_of(g), tape.constant(h), tape.constant(p), 7);
  const Vector s = h * p / p.norm();
  Matrix unpooled = gunpool(out.h, out.record).value();
  for (Index i = 0; i < 7; ++i)
    for (Index f = 0; f < 3; ++f) EXPECT_NEAR(unpooled(i, f), h(i, f) * sigmoid(s(i)), 1e-12);
}

TEST(GPool, DegenerateProjectionAndBadK) {
  Graph g(3, {{0, 1}});
  Tape tape;
  EXPECT_THROW(gpool(operand_of(g), tape.constant(Matrix::Ones(3, 2)), tape.constant(Matrix::Zero(2, 1)), 2),
               DomainError);
  EXPECT_THROW(gpool(operand_of(g), tape.constant(Matrix::Ones(3, 2)), tape.constant(Matrix::Ones(2, 1)), 4),
               InvalidArgument);
}

TEST(GPool, PooledConnectivity) {
  // Path 0-1-2-3-4; keep the three highest scores {0, 2, 4}.
  Graph g(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  Tape tape;
  Matrix h(5, 1);
  h << 5, 1, 4, 0, 3;
  auto squared = gpool(operand_of(g, PoolConnectivity::Squared), tape.constant(h), tape.constant(Matrix{{1}}), 3);
  auto induced = gpool(operand_of(g, PoolConnectivity::Induced), tape.constant(h), tape.constant(Matrix{{1}}), 3);
  EXPECT_EQ(squared.record.selected, (std::vector<Index>{0, 2, 4}));
  // Two-hop neighbours are connected in the squared graph; nothing is in the induced one.
  EXPECT_EQ(squared.graph.pool_support, (Matrix{{1, 1, 0}, {1, 1, 1}, {0, 1, 1}}));
  EXPECT_EQ(induced.graph.pool_support, Matrix::Identity(3, 3));
  EXPECT_TRUE(induced.graph.normalized.isApprox(Matrix::Identity(3, 3)));
}

TEST(GUnpool, RowSupportEqualsSelection) {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    Graph g = random_geometric_graph({11, 0.5, 3, std::uint64_t(rep)});
    Tape tape;
    const Matrix h = random_matrix(11, 4, rng);
    auto out = gpool(operand_of(g), tape.constant(h), tape.constant(random_matrix(4, 1, rng)), 6);
    Matrix back = gunpool(out.h, out.record).value();
    std::vector<Index> support;
    for (Index i = 0; i < 11; ++i)
      if (back.row(i).cwiseAbs().sum() > 0) support.push_back(i);
    std::vector<Index> sel = out.record.selected;
    std::sort(sel.begin(), sel.end());
    EXPECT_EQ(support, sel);
    for (std::size_t r = 0; r < out.record.selected.size(); ++r)
      EXPECT_EQ(back.row(out.record.selected[r]), out.h.value().row(Index(r)));
  }
}

TEST(GUnpool, InconsistentRecord) {
  Tape tape;
  PoolRecord rec;
  rec.selected = {0, 1};
  rec.parent_size = 3;
  EXPECT_THROW(gunpool(tape.constant(Matrix::Ones(3, 2)), rec), DimensionError);
}

TEST(GUnetBlock, ShapesAndSingleNode) {
  ParameterStore store(1);
  register_gunet_block(store, "blk", 2, 5);
  Rng rng(8);
  Graph g = random_geometric_graph({9, 0.5, 3, 2});
  Tape tape;
  Var out = gunet_block(tape, store, "blk", operand_of(g), tape.constant(random_matrix(9, 2, rng)));
  EXPECT_EQ(out.rows(), 9);
  EXPECT_EQ(out.cols(), 5);

  Tape t1;
  Var one = gunet_block(t1, store, "blk", operand_of(Graph(1, {})), t1.constant(random_matrix(1, 2, rng)));
  EXPECT_EQ(one.rows(), 1);
}

TEST(GUnetBlock, PermutationEquivariance) {
  ParameterStore store(2);
  register_gunet_block(store, "blk", 3, 4);
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    Graph g = random_geometric_graph({14, 0.45, 3, std::uint64_t(100 + rep)});
    std::vector<Index> perm(14);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<Edge> edges;
    std::vector<Index> inv(14);
    for (Index i = 0; i < 14; ++i) inv[std::size_t(perm[std::size_t(i)])] = i;
    for (auto [a, b] : g.edges()) edges.emplace_back(NodeId(inv[a]), NodeId(inv[b]));
    Graph gp(14, edges);
    const Matrix h = random_matrix(14, 3, rng);
    const Matrix p = permutation_matrix(perm);
    Tape t1, t2;
    Matrix base = gunet_block(t1, store, "blk", operand_of(g), t1.constant(h)).value();
    Matrix moved = gunet_block(t2, store, "blk", operand_of(gp), t2.constant(p * h)).value();
    EXPECT_LT((moved - p * base).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(GaussianSample, ZeroSigmaLimitAndGradients) {
  Rng rng(10);
  Tape tape;
  Var mu = tape.input(random_matrix(3, 2, rng));
  Var sigma = tape.input(Matrix::Constant(3, 2, 1e-300));
  Var z = gaussian_sample(mu, sigma, rng);
  EXPECT_TRUE(z.value().isApprox(mu.value()));
  tape.backward(ops::sum(z));
  EXPECT_EQ(tape.grad(mu), Matrix::Ones(3, 2));
}

TEST(GaussianSample, GradientWrtSigmaIsEps) {
  Tape tape;
  const Matrix eps{{0.5, -1.0}, {2.0, 0.0}};
  Var mu = tape.input(Matrix::Zero(2, 2));
  Var sigma = tape.input(Matrix::Constant(2, 2, 3.0));
  Var z = gaussian_sample(mu, sigma, eps);
  EXPECT_EQ(z.value(), 3.0 * eps);
  tape.backward(ops::sum(z));
  EXPECT_EQ(tape.grad(sigma), eps);
}

TEST(GaussianSample, Moments) {
  Rng rng(11);
  Tape tape;
  Var z = gaussian_sample(tape.constant(Matrix::Zero(1000, 100)), tape.constant(Matrix::Ones(1000, 100)), rng);
  const double n = 1e5;
  const double mean = z.value().mean();
  const double var = (z.value().array() - mean).square().sum() / (n - 1);
  EXPECT_LT(std::abs(mean), 3 * std::sqrt(1.0 / n));
  EXPECT_LT(std::abs(var - 1.0), 3 * std::sqrt(2.0 / (n - 1)));
}

TEST(GaussianSample, NonPositiveSigma) {
  Rng rng(1);
  Tape tape;
  EXPECT_THROW(gaussian_sample(tape.constant(Matrix::Zero(2, 2)), tape.constant(Matrix{{1, 0}, {1, 1}}), rng),
               DomainError);
}

TEST(Dense, IdentityZeroAndOracle) {
  Tape tape;
  Matrix v{{1.0, -2.0, 3.0}};
  EXPECT_EQ(dense_layer(tape.constant(v), tape.constant(Matrix::Identity(3, 3)), tape.constant(Matrix::Zero(1, 3)),
                        Activation::Identity)
                .value(),
            v);
  EXPECT_EQ(dense_layer(tape.constant(Matrix::Zero(1, 3)), tape.constant(Matrix::Ones(3, 2)),
                        tape.constant(Matrix::Zero(1, 2)), Activation::Relu)
                .value(),
            Matrix::Zero(1, 2));
  Rng rng(12);
  const Matrix w = random_matrix(3, 4, rng), b = random_matrix(1, 4, rng);
  Matrix out = dense_layer(tape.constant(v), tape.constant(w), tape.constant(b), Activation::Relu).value();
  for (Index j = 0; j < 4; ++j) {
    double acc = b(0, j);
    for (Index i = 0; i < 3; ++i) acc += v(0, i) * w(i, j);
    EXPECT_NEAR(out(0, j), std::max(acc, 0.0), 1e-12);
  }
}

TEST(Conv1d, DeltaKernelIsIdentity) {
  Tape tape;
  Matrix h(5, 1);
  h << 1, 2, 3, 4, 5;
  Var out = conv1d(tape.constant(h), tape.constant(Matrix{{0, 1, 0}}), tape.constant(Matrix::Zero(1, 1)), 3, 1);
  EXPECT_EQ(out.value(), h);
}

TEST(Conv1d, ConstantInputInteriorSum) {
  Tape tape;
  Var out = conv1d(tape.constant(Matrix::Constant(6, 1, 2.0)), tape.constant(Matrix{{0.5, 1.0, 1.5}}),
                   tape.constant(Matrix::Zero(1, 1)), 3, 1);
  for (Index i = 1; i < 5; ++i) EXPECT_DOUBLE_EQ(out.value()(i, 0), 6.0);
  EXPECT_DOUBLE_EQ(out.value()(0, 0), 5.0);
}

TEST(Conv1d, MatchesSlidingWindowOracle) {
  Rng rng(13);
  const Index L = 9, cin = 3, cout = 4, K = 3;
  const Matrix h = random_matrix(L, cin, rng), k = random_matrix(cout, cin * K, rng), b = random_matrix(1, cout, rng);
  Tape tape;
  Matrix out = conv1d(tape.constant(h), tape.constant(k), tape.constant(b), K, 1).value();
  ASSERT_EQ(out.rows(), L);
  for (Index i = 0; i < L; ++i)
    for (Index o = 0; o < cout; ++o) {
      double acc = b(0, o);
      for (Index c = 0; c < cin; ++c)
        for (Index q = 0; q < K; ++q) {
          const Index src = i + q - 1;
          if (src >= 0 && src < L) acc += k(o, c * K + q) * h(src, c);
        }
      EXPECT_NEAR(out(i, o), acc, 1e-12);
    }
}

TEST(ConvTranspose1d, SingleTapExpansion) {
  Tape tape;
  Var out = conv_transpose1d(tape.constant(Matrix{{3.0}}), tape.constant(Matrix{{1.0, 1.0}}),
                             tape.constant(Matrix::Zero(1, 1)), 1, 2, 2, 0);
  EXPECT_EQ(out.value(), (Matrix{{3.0, 3.0}}));
  EXPECT_EQ(conv_transpose_length(1, 2, 2, 0), 2);
  EXPECT_EQ(conv_transpose_length(16, 1, 5, 0), 20);
}

TEST(ConvTranspose1d, MatchesInsertZerosThenConvolve) {
  Rng rng(14);
  for (auto [stride, K, pad] : std::vector<std::tuple<Index, Index, Index>>{{2, 2, 0}, {2, 3, 1}, {1, 3, 1}, {3, 4, 0}}) {
    const Index B = 3, cin = 2, cout = 3, L = 4;
    const Matrix x = random_matrix(B, cin * L, rng), w = random_matrix(cin, cout * K, rng), b = random_matrix(1, cout, rng);
    Tape tape;
    Matrix out = conv_transpose1d(tape.constant(x), tape.constant(w), tape.constant(b), cin, stride, K, pad).value();
    const Index lout = conv_transpose_length(L, stride, K, pad);
    ASSERT_EQ(out.cols(), cout * lout);
    // Oracle: dilate the input by inserting stride-1 zeros, pad with K-1-pad
    // zeros, then correlate with the flipped kernel.
    const Index dil = (L - 1) * stride + 1;
    const Index full = dil + 2 * (K - 1 - pad);
    for (Index r = 0; r < B; ++r)
      for (Index o = 0; o < cout; ++o)
        for (Index t = 0; t < lout; ++t) {
          double acc = b(0, o);
          for (Index c = 0; c < cin; ++c) {
            std::vector<double> padded(std::size_t(full), 0.0);
            for (Index l = 0; l < L; ++l) padded[std::size_t(K - 1 - pad + l * stride)] = x(r, c * L + l);
            for (Index q = 0; q < K; ++q) acc += padded[std::size_t(t + q)] * w(c, o * K + (K - 1 - q));
          }
          ASSERT_NEAR(out(r, o * lout + t), acc, 1e-10);
        }
  }
}

TEST(BatchNorm, ZeroVarianceBatchGivesShift) {
  Matrix mean = Matrix::Zero(1, 2), var = Matrix::Ones(1, 2);
  BatchNormState st{&mean, &var};
  Tape tape;
  Var out = batch_norm(tape.constant(Matrix::Constant(4, 6, 3.0)), tape.constant(Matrix::Ones(1, 2)),
                       tape.constant(Matrix::Zero(1, 2)), 2, true, st);
  EXPECT_LT(out.value().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(mean(0, 0), 0.3, 1e-12);
}

TEST(BatchNorm, EvalModeUsesRunningStatistics) {
  Matrix mean = Matrix::Constant(1, 1, 2.0), var = Matrix::Constant(1, 1, 4.0);
  BatchNormState st{&mean, &var};
  Tape tape;
  Var out = batch_norm(tape.constant(Matrix{{4.0, 6.0}}), tape.constant(Matrix::Ones(1, 1)),
                       tape.constant(Matrix::Zero(1, 1)), 1, false, st);
  EXPECT_NEAR(out.value()(0, 0), 2.0 / std::sqrt(4.0 + 1e-5), 1e-12);
  EXPECT_NEAR(out.value()(0, 1), 4.0 / std::sqrt(4.0 + 1e-5), 1e-12);
  EXPECT_EQ(mean(0, 0), 2.0);
}

TEST(LayerGradients, GcnPoolUnetAndConvolutions) {
  Rng rng(15);
  Graph g = random_geometric_graph({8, 0.55, 3, 3});
  const GraphOperand op = operand_of(g);
  ParameterStore store(3);
  register_gunet_block(store, "u", 2, 3);
  store.add("h", random_matrix(8, 2, rng));
  store.add("k", random_matrix(2, 6, rng));
  store.add("kb", random_matrix(1, 2, rng));
  store.add("tw", random_matrix(2, 3 * 3, rng));
  store.add("tb", random_matrix(1, 3, rng));
  const Matrix target = random_matrix(8, 3, rng);
  auto loss = [&](Tape& t) {
    Var h = t.parameter(store, "h");
    Var u = gunet_block(t, store, "u", op, h);
    Var c = conv1d(h, t.parameter(store, "k"), t.parameter(store, "kb"), 3, 1);
    Var tc = conv_transpose1d(ops::reshape(h, 1, 16), t.parameter(store, "tw"), t.parameter(store, "tb"), 2, 2, 3, 1);
    return ops::add(ops::add(ops::sum(ops::square(ops::sub(u, t.constant(target)))), ops::sum(ops::square(c))),
                    ops::mean(ops::square(tc)));
  };
  auto report = grad_check(store, loss);
  ASSERT_FALSE(report.near_kink(1e-5)) << "instance sits on a kink";
  EXPECT_TRUE(report.passed(1e-4)) << report.max_rel_error << " at " << report.worst_entry;
}
