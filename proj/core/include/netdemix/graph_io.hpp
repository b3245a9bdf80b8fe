#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "netdemix/graph.hpp"

namespace netdemix {

/// `i,j` header, one undirected edge per line with i < j, 0-based ids.
void write_edge_list(const Graph& g, std::ostream& out);

/// `node,class,x,y,z` header; class and coordinates empty when absent.
void write_node_metadata(const Graph& g, std::ostream& out);

/// Rebuilds a graph from the two CSVs above. Node count comes from the
/// metadata file.
Graph read_graph(std::istream& edges, std::istream& nodes, std::string id = {});

/// Writes `edges.csv` and `nodes.csv` into `dir` (created if needed).
void save_graph(const Graph& g, const std::filesystem::path& dir);
Graph load_graph(const std::filesystem::path& dir);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace netdemix
