#include <gtest/gtest.h>

#include <cmath>

#include "netdemix/ddmix.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/sirs.hpp"

using namespace netdemix;

namespace {

Graph star(std::size_t leaves) {
  std::vector<Edge> edges;
  for (NodeId k = 1; k <= leaves; ++k) edges.emplace_back(0, k);
  return Graph(leaves + 1, edges);
}

Graph ring(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
  return Graph(n, edges);
}

}  // namespace

TEST(SirsParams, Validation) {
  EXPECT_NO_THROW((SIRSParams{0.15, 0.1, 0.01}.validate()));
  EXPECT_THROW((SIRSParams{1.5, 0.1, 0.01}.validate()), InvalidArgument);
  EXPECT_THROW((SIRSParams{0.1, -0.1, 0.01}.validate()), InvalidArgument);
}

TEST(SirsStep, CertainInfection) {
  Graph g = star(3);
  std::vector<State> s{State::I, State::S, State::S, State::S};
  Rng rng(1);
  auto next = sirs_step(s, g, {1.0, 0.0, 0.0}, rng);
  EXPECT_EQ(next, (std::vector<State>{State::I, State::I, State::I, State::I}));
}

TEST(SirsStep, CertainHealing) {
  Graph g = ring(5);
  std::vector<State> s(5, State::I);
  Rng rng(2);
  auto next = sirs_step(s, g, {0.5, 1.0, 0.0}, rng);
  EXPECT_EQ(next, std::vector<State>(5, State::R));
}

TEST(SirsStep, LengthMismatchIsAnError) {
  Graph g = ring(5);
  std::vector<State> s(4, State::S);
  Rng rng(0);
  EXPECT_THROW(sirs_step(s, g, {}, rng), DimensionError);
}

TEST(SirsStep, InfectionProbabilityWithThreeInfectedNeighbours) {
  // Node 0 is susceptible with three infected leaves; delta=0 keeps them infected.
  Graph g = star(3);
  const std::vector<State> s{State::S, State::I, State::I, State::I};
  const SIRSParams p{0.15, 0.0, 0.0};
  Rng rng(12345);
  const int trials = 100000;
  int infected = 0;
  for (int k = 0; k < trials; ++k) infected += sirs_step(s, g, p, rng)[0] == State::I;
  const double expected = 1.0 - std::pow(0.85, 3);
  const double se = std::sqrt(expected * (1 - expected) / trials);
  EXPECT_NEAR(double(infected) / trials, expected, 3 * se);
}

TEST(SirsStep, ImmunityLossProbability) {
  Graph g(1, {});
  const std::vector<State> s{State::R};
  Rng rng(99);
  const int trials = 100000;
  int lost = 0;
  for (int k = 0; k < trials; ++k) lost += sirs_step(s, g, {0.15, 0.1, 0.01}, rng)[0] == State::S;
  const double se = std::sqrt(0.01 * 0.99 / trials);
  EXPECT_NEAR(double(lost) / trials, 0.01, 3 * se);
}

TEST(Simulate, NoSourceGivesZeroTrajectory) {
  Graph g = ring(6);
  Rng rng(3);
  auto traj = simulate(g, {}, 8, std::vector<NodeId>{}, rng);
  EXPECT_EQ(traj.Y.rows(), 6);
  EXPECT_EQ(traj.Y.cols(), 8);
  EXPECT_EQ(traj.Y.sum(), 0.0);
}

TEST(Simulate, NoInfectionCertainHealing) {
  Graph g = ring(6);
  Rng rng(3);
  const std::vector<NodeId> src{2};
  auto traj = simulate(g, {0.0, 1.0, 0.0}, 5, src, rng);
  EXPECT_EQ(traj.Y.sum(), 1.0);
  EXPECT_EQ(traj.Y(2, 0), 1.0);
}

TEST(Simulate, HorizonMustBePositive) {
  Graph g = ring(3);
  Rng rng(0);
  EXPECT_THROW(simulate(g, {}, 0, std::vector<NodeId>{0}, rng), InvalidArgument);
}

TEST(Simulate, StatesAndIndicatorsAgree) {
  Graph g = random_geometric_graph({40, 0.35, 3, 2});
  Rng rng(8);
  const std::vector<NodeId> src{0, 5};
  auto traj = simulate(g, {}, 30, src, rng);
  for (std::size_t t = 0; t < 30; ++t)
    for (NodeId i = 0; i < 40; ++i)
      ASSERT_EQ(traj.Y(Index(i), Index(t)) == 1.0, traj.state(i, t) == State::I);
  EXPECT_TRUE(has_legal_transitions(traj));
  EXPECT_TRUE(satisfies_locality(traj, g));
}

TEST(Simulate, LocalityAndLegalityOverManyTrajectories) {
  Graph g = random_geometric_graph({60, 0.3, 3, 5});
  auto data = generate_dataset(g, {0.3, 0.2, 0.1}, 25, 300, {}, 77);
  for (const auto& s : data) {
    ASSERT_TRUE(satisfies_locality(s.traj, g));
    ASSERT_TRUE(has_legal_transitions(s.traj));
  }
}

TEST(Locality, DetectsOrphanInfection) {
  Graph g(2, {});
  EpidemicTrajectory traj;
  traj.T = 2;
  traj.Y = Matrix{{0, 1}, {0, 0}};
  traj.states = {State::S, State::S, State::I, State::S};
  EXPECT_FALSE(satisfies_locality(traj, g));
}

TEST(Locality, DetectsIllegalTransition) {
  EpidemicTrajectory traj;
  traj.T = 2;
  traj.Y = Matrix{{1, 0}};
  traj.states = {State::I, State::S};
  EXPECT_FALSE(has_legal_transitions(traj));
}

TEST(Aggregate, Formula) {
  EpidemicTrajectory traj;
  traj.T = 20;
  traj.Y = Matrix::Zero(3, 20);
  traj.Y.row(1).setOnes();
  traj.Y.block(2, 3, 1, 5).setOnes();
  auto obs = aggregate(traj);
  EXPECT_EQ(obs.T, 20u);
  EXPECT_EQ(obs.x(0), 0.0);
  EXPECT_EQ(obs.x(1), 1.0);
  EXPECT_EQ(obs.x(2), 0.25);
}

TEST(Aggregate, TimeConstantTrajectoryEqualsItsColumn) {
  EpidemicTrajectory traj;
  traj.T = 7;
  Vector col(4);
  col << 1, 0, 1, 1;
  traj.Y = col.replicate(1, 7);
  EXPECT_EQ(aggregate(traj).x, col);
}

TEST(GenerateDataset, ShapesAndExactAggregation) {
  Graph g = random_geometric_graph({30, 0.4, 3, 1});
  auto data = generate_dataset(g, {}, 20, 50, {}, 4);
  ASSERT_EQ(data.size(), 50u);
  for (const auto& s : data) {
    ASSERT_EQ(s.traj.Y.rows(), 30);
    ASSERT_EQ(s.traj.Y.cols(), 20);
    ASSERT_EQ(s.source.size(), 1u);
    Vector x = Vector::Zero(30);
    for (Index t = 0; t < 20; ++t) x += s.traj.Y.col(t);
    for (Index i = 0; i < 30; ++i) x(i) = double(std::llround(x(i))) / 20.0;
    ASSERT_EQ(s.obs.x, x);
    for (Index i = 0; i < 30; ++i) {
      const double k = s.obs.x(i) * 20;
      ASSERT_EQ(k, std::round(k));
    }
  }
}

TEST(GenerateDataset, DeterministicAndScheduleIndependent) {
  Graph g = random_geometric_graph({25, 0.4, 3, 2});
  auto a = generate_dataset(g, {}, 10, 20, {}, 9);
  auto b = generate_dataset(g, {}, 10, 20, {}, 9);
  for (std::size_t m = 0; m < 20; ++m) {
    ASSERT_EQ(a[m].traj.Y, b[m].traj.Y);
    ASSERT_EQ(a[m].source, b[m].source);
    Sample one = simulate_sample(g, {}, 10, {}, substream_seed(9, m));
    ASSERT_EQ(one.traj.Y, a[m].traj.Y);
  }
}

TEST(SourceRule, RespectsCountAndCandidates) {
  SourceRule rule;
  rule.count = 3;
  rule.candidates = {4, 7, 9, 11};
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    auto s = rule.draw(12, rng);
    ASSERT_EQ(s.size(), 3u);
    ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
    for (auto v : s) ASSERT_TRUE(v == 4 || v == 7 || v == 9 || v == 11);
  }
  rule.count = 5;
  EXPECT_THROW(rule.draw(12, rng), InvalidArgument);
}

TEST(GenerateDataset, RingExpectedInfectionsAreNodeUniform) {
  // Vertex-transitive graph with uniform sources: every node has the same
  // expected number of infected steps.
  Graph g = ring(8);
  auto data = generate_dataset(g, {0.3, 0.2, 0.05}, 12, 4000, {}, 21);
  Vector total = Vector::Zero(8);
  for (const auto& s : data) total += s.traj.Y.rowwise().sum();
  total /= double(data.size());
  const double mean = total.mean();
  for (Index i = 0; i < 8; ++i) EXPECT_NEAR(total(i), mean, 0.08 * mean);
}

TEST(LocalityPenalty, ZeroOnSimulatedTrajectories) {
  Graph g = random_geometric_graph({40, 0.3, 3, 6});
  auto data = generate_dataset(g, {}, 20, 200, {}, 3);
  for (const auto& s : data) {
    Tape tape;
    Var y = tape.constant(s.traj.Y);
    ASSERT_EQ(locality_penalty(y, g.adjacency()).value()(0, 0), 0.0);
  }
}
