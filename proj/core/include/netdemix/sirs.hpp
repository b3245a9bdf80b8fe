#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdemix/graph.hpp"
#include "netdemix/rng.hpp"
#include "netdemix/types.hpp"

namespace netdemix {

enum class State : std::uint8_t { S = 0, I = 1, R = 2 };

struct SIRSParams {
  double beta = 0.15;   ///< per infected neighbour, per step
  double delta = 0.1;   ///< I -> R
  double gamma = 0.01;  ///< R -> S

  void validate() const;
};

/// Full realisation of one epidemic over T steps.
struct EpidemicTrajectory {
  /// N x T, entry (i, t) is 1.0 iff node i is infected at step t (0-based t).
  Matrix Y;
  /// N x T states, column-major: states[t * N + i].
  std::vector<State> states;
  std::size_t T = 0;
  std::string graph_id;

  std::size_t num_nodes() const { return std::size_t(Y.rows()); }
  State state(NodeId i, std::size_t t) const { return states[t * num_nodes() + i]; }
};

/// x = (1/T) sum_t y^(t).
struct AggregatedObservation {
  Vector x;
  std::size_t T = 0;
};

/// One synchronous SIRS transition. Consumes exactly one uniform per node,
/// in node order. A node infected this step cannot heal before the next one.
std::vector<State> sirs_step(std::span<const State> states, const Graph& g,
                             const SIRSParams& p, Rng& rng);

/// Step 1 is the initial condition; steps 2..T follow by sirs_step.
EpidemicTrajectory simulate(const Graph& g, const SIRSParams& p, std::size_t T,
                            std::span<const NodeId> initial_infected, Rng& rng);

AggregatedObservation aggregate(const EpidemicTrajectory& traj);

/// Chooses the initially infected nodes of a sample.
struct SourceRule {
  std::size_t count = 1;
  /// Restrict sources to these nodes; all nodes when empty.
  std::vector<NodeId> candidates;

  std::vector<NodeId> draw(std::size_t num_nodes, Rng& rng) const;
};

struct Sample {
  AggregatedObservation obs;
  EpidemicTrajectory traj;
  std::vector<NodeId> source;
  std::uint64_t seed = 0;
};

/// M independent samples. Sample m uses substream m of `master_seed`, so the
/// result does not depend on how the work is scheduled.
std::vector<Sample> generate_dataset(const Graph& g, const SIRSParams& p, std::size_t T,
                                     std::size_t num_samples, const SourceRule& rule,
                                     std::uint64_t master_seed);

/// Rebuilds one sample from its substream seed (same as generate_dataset's
/// m-th element when seed == substream_seed(master, m)).
Sample simulate_sample(const Graph& g, const SIRSParams& p, std::size_t T,
                       const SourceRule& rule, std::uint64_t seed);

/// True iff every infection at t >= 2 has an infected node in its closed
/// neighbourhood at t - 1.
bool satisfies_locality(const EpidemicTrajectory& traj, const Graph& g);

/// True iff every transition is one of S->{S,I}, I->{I,R}, R->{R,S}.
bool has_legal_transitions(const EpidemicTrajectory& traj);

}  // namespace netdemix
