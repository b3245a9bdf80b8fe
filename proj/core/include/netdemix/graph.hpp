#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netdemix/types.hpp"

namespace netdemix {

using Edge = std::pair<NodeId, NodeId>;

/// Optional per-node annotations carried alongside the topology.
struct GraphAttributes {
  std::string id;
  std::optional<std::vector<std::string>> node_classes;
  /// N x dim, one row per node.
  std::optional<Matrix> coordinates;
  /// Identifiers from the source data set (contact ingestion), one per node.
  std::optional<std::vector<std::int64_t>> original_ids;
};

/// Undirected, unweighted simple graph. Immutable once constructed.
class Graph {
 public:
  /// Edges may be given in either orientation; duplicates are merged.
  /// Throws InvalidArgument on self-loops, out-of-range endpoints or
  /// attribute vectors whose length differs from num_nodes.
  Graph(std::size_t num_nodes, std::vector<Edge> edges, GraphAttributes attrs = {});

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  /// Sorted, each pair with first < second.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Dense symmetric 0/1 matrix with zero diagonal.
  const Matrix& adjacency() const noexcept { return adjacency_; }

  const std::vector<NodeId>& neighbors(NodeId i) const { return neighbors_.at(i); }
  std::size_t degree(NodeId i) const { return neighbors_.at(i).size(); }
  bool has_edge(NodeId i, NodeId j) const { return adjacency_(Index(i), Index(j)) != 0.0; }

  const std::string& id() const noexcept { return attrs_.id; }
  const std::optional<std::vector<std::string>>& node_classes() const noexcept {
    return attrs_.node_classes;
  }
  const std::optional<Matrix>& coordinates() const noexcept { return attrs_.coordinates; }
  const std::optional<std::vector<std::int64_t>>& original_ids() const noexcept {
    return attrs_.original_ids;
  }
  const GraphAttributes& attributes() const noexcept { return attrs_; }

 private:
  std::size_t num_nodes_;
  std::vector<Edge> edges_;
  Matrix adjacency_;
  std::vector<std::vector<NodeId>> neighbors_;
  GraphAttributes attrs_;
};

/// Random geometric graph in the unit hypercube.
struct RGGSpec {
  std::size_t n = 100;
  double radius = 0.25;
  int dimension = 3;
  std::uint64_t seed = 0;
};

/// Nodes uniform in [0,1]^dimension; edge iff Euclidean distance <= radius.
Graph random_geometric_graph(const RGGSpec& spec);

/// Symmetrically renormalized adjacency with self-loops.
struct NormalizedAdjacency {
  Matrix matrix;
  std::string source_graph_id;
};

/// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Same renormalization applied to a 0/1 matrix that already contains its
/// self-loops on the diagonal.
Matrix normalize_with_self_loops(const Matrix& support);

struct Subgraph {
  Graph graph;
  /// new index -> old index
  std::vector<NodeId> new_to_old;
  /// old index -> new index, std::nullopt for dropped nodes
  std::vector<std::optional<NodeId>> old_to_new;
};

/// Subgraph induced by `keep` (any order, duplicates ignored). Surviving nodes
/// are re-indexed in ascending old-index order; attributes follow their nodes.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep);

/// One face-to-face contact event.
struct ContactRecord {
  std::int64_t timestamp = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::string class_i;
  std::string class_j;
};

/// Parses `timestamp,i,j,class_i,class_j` lines, tab- or comma-separated
/// (detected from the first data line). A leading header line is skipped.
/// Throws ParseError carrying the 1-based line number.
std::vector<ContactRecord> parse_contact_records(std::istream& in);

/// Splits records into calendar days (timestamp / day_seconds), ascending.
std::vector<std::vector<ContactRecord>> split_records_by_day(
    std::span<const ContactRecord> records, std::int64_t day_seconds = 86400);

/// Builds the contact graph of one day: edge iff the pair has strictly more
/// than `min_contacts` events. Nodes without a qualifying edge are dropped;
/// the rest are indexed by ascending original id.
Graph load_contact_graph(std::span<const ContactRecord> records, int min_contacts,
                         std::string id = "contacts");

/// Inverse of load_contact_graph for graphs carrying classes: every edge
/// emitted min_contacts + 1 times.
std::vector<ContactRecord> contact_records_from_graph(const Graph& g, int min_contacts);

}  // namespace netdemix
