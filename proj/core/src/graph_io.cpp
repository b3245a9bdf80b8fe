#include "netdemix/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "netdemix/errors.hpp"

namespace netdemix {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "i,j\n";
  for (const auto& [a, b] : g.edges()) out << a << ',' << b << '\n';
}

void write_node_metadata(const Graph& g, std::ostream& out) {
  out << "node,class,x,y,z\n";
  const auto& cls = g.node_classes();
  const auto& coords = g.coordinates();
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    out << i << ',';
    if (cls) out << (*cls)[i];
    for (Index d = 0; d < 3; ++d) {
      out << ',';
      if (coords && d < coords->cols()) out << format_double((*coords)(Index(i), d));
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string f;
  std::istringstream ss(line);
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_index(const std::string& s, std::size_t lineno) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad node index '" + s + "'", lineno);
  return v;
}

double parse_real(const std::string& s, std::size_t lineno) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "'", lineno);
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Graph read_graph(std::istream& edges_in, std::istream& nodes_in, std::string id) {
  std::string line;
  std::size_t lineno = 0;

  std::vector<std::string> classes;
  std::vector<std::vector<double>> coords;
  bool any_class = false;
  int coord_dims = -1;
  if (!std::getline(nodes_in, line)) throw ParseError("missing node metadata header", 1);
  ++lineno;
  strip_cr(line);
  if (line != "node,class,x,y,z") throw ParseError("unexpected node metadata header", lineno);
  while (std::getline(nodes_in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 5) throw ParseError("expected 5 fields in node metadata", lineno);
    if (parse_index(f[0], lineno) != classes.size())
      throw ParseError("node ids must be consecutive from 0", lineno);
    classes.push_back(f[1]);
    any_class = any_class || !f[1].empty();
    int dims = 0;
    std::vector<double> c;
    for (int d = 0; d < 3; ++d) {
      if (f[std::size_t(2 + d)].empty()) break;
      c.push_back(parse_real(f[std::size_t(2 + d)], lineno));
      ++dims;
    }
    if (coord_dims == -1) coord_dims = dims;
    if (dims != coord_dims) throw ParseError("inconsistent coordinate dimension", lineno);
    coords.push_back(std::move(c));
  }
  if (classes.empty()) throw ParseError("node metadata lists no nodes", lineno);

  std::vector<Edge> edges;
  lineno = 0;
  if (!std::getline(edges_in, line)) throw ParseError("missing edge list header", 1);
  ++lineno;
  strip_cr(line);
  if (line != "i,j") throw ParseError("unexpected edge list header", lineno);
  while (std::getline(edges_in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 2) throw ParseError("expected 2 fields in edge list", lineno);
    const auto a = parse_index(f[0], lineno);
    const auto b = parse_index(f[1], lineno);
    if (a >= b) throw ParseError("edge list requires i < j", lineno);
    if (b >= classes.size()) throw ParseError("edge endpoint beyond node count", lineno);
    edges.emplace_back(a, b);
  }

  GraphAttributes attrs;
  attrs.id = std::move(id);
  if (any_class) attrs.node_classes = std::move(classes);
  if (coord_dims > 0) {
    Matrix m(Index(coords.size()), coord_dims);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index d = 0; d < coord_dims; ++d) m(i, d) = coords[std::size_t(i)][std::size_t(d)];
    attrs.coordinates = std::move(m);
  }
  const auto n = attrs.node_classes ? attrs.node_classes->size() : coords.size();
  return Graph(n, std::move(edges), std::move(attrs));
}

void save_graph(const Graph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream e(dir / "edges.csv");
  std::ofstream n(dir / "nodes.csv");
  if (!e || !n) throw IoError("cannot write graph files in " + dir.string());
  write_edge_list(g, e);
  write_node_metadata(g, n);
}

Graph load_graph(const std::filesystem::path& dir) {
  std::ifstream e(dir / "edges.csv");
  std::ifstream n(dir / "nodes.csv");
  if (!e || !n) throw IoError("cannot read edges.csv/nodes.csv in " + dir.string());
  return read_graph(e, n, dir.filename().string());
}

}  // namespace netdemix
