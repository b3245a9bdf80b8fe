#include "netdemix/sirs.hpp"

#include <algorithm>
#include <cmath>

#include "netdemix/errors.hpp"

namespace netdemix {

void SIRSParams::validate() const {
  auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!ok(beta) || !ok(delta) || !ok(gamma))
    throw InvalidArgument("SIRS probabilities must lie in [0, 1]");
}

std::vector<State> sirs_step(std::span<const State> states, const Graph& g,
                             const SIRSParams& p, Rng& rng) {
  if (states.size() != g.num_nodes())
    throw DimensionError("sirs_step: " + std::to_string(states.size()) + " states for " +
                         std::to_string(g.num_nodes()) + " nodes");
  std::vector<State> next(states.begin(), states.end());
  for (NodeId i = 0; i < states.size(); ++i) {
    const double u = rng.uniform();
    switch (states[i]) {
      case State::S: {
        std::size_t k = 0;
        for (NodeId j : g.neighbors(i)) k += states[j] == State::I;
        if (k > 0 && u < 1.0 - std::pow(1.0 - p.beta, double(k))) next[i] = State::I;
        break;
      }
      case State::I:
        if (u < p.delta) next[i] = State::R;
        break;
      case State::R:
        if (u < p.gamma) next[i] = State::S;
        break;
    }
  }
  return next;
}

EpidemicTrajectory simulate(const Graph& g, const SIRSParams& p, std::size_t T,
                            std::span<const NodeId> initial_infected, Rng& rng) {
  if (T < 1) throw InvalidArgument("simulate: horizon T must be >= 1");
  p.validate();
  const std::size_t n = g.num_nodes();
  std::vector<State> cur(n, State::S);
  for (NodeId s : initial_infected) {
    if (s >= n) throw InvalidArgument("simulate: initial node " + std::to_string(s) + " out of range");
    cur[s] = State::I;
  }

  EpidemicTrajectory traj;
  traj.T = T;
  traj.graph_id = g.id();
  traj.states.reserve(n * T);
  traj.Y = Matrix::Zero(Index(n), Index(T));
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) cur = sirs_step(cur, g, p, rng);
    for (NodeId i = 0; i < n; ++i) {
      traj.states.push_back(cur[i]);
      if (cur[i] == State::I) traj.Y(Index(i), Index(t)) = 1.0;
    }
  }
  return traj;
}

AggregatedObservation aggregate(const EpidemicTrajectory& traj) {
  // Integer counts are exact, so the only rounding is the final division.
  Vector x(traj.Y.rows());
  const double T = double(traj.T);
  for (Index i = 0; i < traj.Y.rows(); ++i) {
    long count = 0;
    for (Index t = 0; t < traj.Y.cols(); ++t) count += traj.Y(i, t) != 0.0;
    x(i) = double(count) / T;
  }
  return {std::move(x), traj.T};
}

std::vector<NodeId> SourceRule::draw(std::size_t num_nodes, Rng& rng) const {
  std::vector<NodeId> pool = candidates;
  if (pool.empty()) {
    pool.resize(num_nodes);
    for (NodeId i = 0; i < num_nodes; ++i) pool[i] = i;
  }
  if (count > pool.size())
    throw InvalidArgument("source rule asks for more sources than candidates");
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < count; ++k) {
    const auto pick = k + std::size_t(rng.uniform_index(pool.size() - k));
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Sample simulate_sample(const Graph& g, const SIRSParams& p, std::size_t T,
                       const SourceRule& rule, std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.seed = seed;
  s.source = rule.draw(g.num_nodes(), rng);
  s.traj = simulate(g, p, T, s.source, rng);
  s.obs = aggregate(s.traj);
  return s;
}

std::vector<Sample> generate_dataset(const Graph& g, const SIRSParams& p, std::size_t T,
                                     std::size_t num_samples, const SourceRule& rule,
                                     std::uint64_t master_seed) {
  if (num_samples < 1) throw InvalidArgument("generate_dataset: need at least one sample");
  std::vector<Sample> out;
  out.reserve(num_samples);
  for (std::size_t m = 0; m < num_samples; ++m)
    out.push_back(simulate_sample(g, p, T, rule, substream_seed(master_seed, m)));
  return out;
}

bool satisfies_locality(const EpidemicTrajectory& traj, const Graph& g) {
  const auto& Y = traj.Y;
  for (Index t = 1; t < Y.cols(); ++t) {
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      if (Y(Index(i), t) == 0.0) continue;
      bool ok = Y(Index(i), t - 1) != 0.0;
      for (NodeId j : g.neighbors(i)) ok = ok || Y(Index(j), t - 1) != 0.0;
      if (!ok) return false;
    }
  }
  return true;
}

bool has_legal_transitions(const EpidemicTrajectory& traj) {
  const std::size_t n = traj.num_nodes();
  for (std::size_t t = 1; t < traj.T; ++t) {
    for (NodeId i = 0; i < n; ++i) {
      const State a = traj.state(i, t - 1);
      const State b = traj.state(i, t);
      const bool legal = a == b || (a == State::S && b == State::I) ||
                         (a == State::I && b == State::R) || (a == State::R && b == State::S);
      if (!legal) return false;
    }
  }
  return true;
}

}  // namespace netdemix
