#include "netdemix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "netdemix/errors.hpp"
#include "netdemix/rng.hpp"

namespace netdemix {

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, GraphAttributes attrs)
    : num_nodes_(num_nodes), attrs_(std::move(attrs)) {
  if (num_nodes_ == 0) throw InvalidArgument("graph must have at least one node");
  for (auto& [a, b] : edges) {
    if (a >= num_nodes_ || b >= num_nodes_)
      throw InvalidArgument("edge endpoint out of range: (" + std::to_string(a) + "," +
                            std::to_string(b) + ")");
    if (a == b) throw InvalidArgument("self-loop on node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  if (attrs_.node_classes && attrs_.node_classes->size() != num_nodes_)
    throw InvalidArgument("node_classes must label every node");
  if (attrs_.coordinates && std::size_t(attrs_.coordinates->rows()) != num_nodes_)
    throw InvalidArgument("coordinates must have one row per node");
  if (attrs_.original_ids && attrs_.original_ids->size() != num_nodes_)
    throw InvalidArgument("original_ids must have one entry per node");

  const auto n = Index(num_nodes_);
  adjacency_ = Matrix::Zero(n, n);
  neighbors_.assign(num_nodes_, {});
  for (const auto& [a, b] : edges_) {
    adjacency_(Index(a), Index(b)) = 1.0;
    adjacency_(Index(b), Index(a)) = 1.0;
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

Graph random_geometric_graph(const RGGSpec& spec) {
  if (spec.n == 0) throw InvalidArgument("RGG spec: n must be >= 1");
  if (!(spec.radius >= 0.0)) throw InvalidArgument("RGG spec: radius must be >= 0");
  if (spec.dimension < 1) throw InvalidArgument("RGG spec: dimension must be >= 1");

  Rng rng(spec.seed);
  const auto n = Index(spec.n);
  Matrix coords(n, spec.dimension);
  for (Index i = 0; i < n; ++i)
    for (Index d = 0; d < spec.dimension; ++d) coords(i, d) = rng.uniform();

  const double r2 = spec.radius * spec.radius;
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if ((coords.row(i) - coords.row(j)).squaredNorm() <= r2)
        edges.emplace_back(NodeId(i), NodeId(j));

  GraphAttributes attrs;
  std::ostringstream id;
  id << "rgg-n" << spec.n << "-r" << spec.radius << "-d" << spec.dimension << "-s" << spec.seed;
  attrs.id = id.str();
  attrs.coordinates = std::move(coords);
  return Graph(spec.n, std::move(edges), std::move(attrs));
}

Matrix normalize_with_self_loops(const Matrix& support) {
  const Vector deg = support.rowwise().sum();
  const Vector inv_sqrt = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  Matrix out = inv_sqrt.asDiagonal() * support * inv_sqrt.asDiagonal();
  // Exact symmetry regardless of rounding order.
  return 0.5 * (out + out.transpose());
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const auto n = Index(g.num_nodes());
  Matrix support = g.adjacency() + Matrix::Identity(n, n);
  return {normalize_with_self_loops(support), g.id()};
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep) {
  if (keep.empty()) throw InvalidArgument("induced_subgraph: keep set is empty");
  std::vector<NodeId> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.back() >= g.num_nodes())
    throw InvalidArgument("induced_subgraph: node " + std::to_string(sorted.back()) +
                          " not in graph");

  std::vector<std::optional<NodeId>> old_to_new(g.num_nodes());
  for (NodeId k = 0; k < sorted.size(); ++k) old_to_new[sorted[k]] = k;

  std::vector<Edge> edges;
  for (const auto& [a, b] : g.edges())
    if (old_to_new[a] && old_to_new[b]) edges.emplace_back(*old_to_new[a], *old_to_new[b]);

  GraphAttributes attrs;
  attrs.id = g.id() + "-sub" + std::to_string(sorted.size());
  if (const auto& cls = g.node_classes()) {
    std::vector<std::string> sub;
    for (NodeId old : sorted) sub.push_back((*cls)[old]);
    attrs.node_classes = std::move(sub);
  }
  if (const auto& c = g.coordinates()) {
    Matrix sub(Index(sorted.size()), c->cols());
    for (Index k = 0; k < sub.rows(); ++k) sub.row(k) = c->row(Index(sorted[std::size_t(k)]));
    attrs.coordinates = std::move(sub);
  }
  if (const auto& ids = g.original_ids()) {
    std::vector<std::int64_t> sub;
    for (NodeId old : sorted) sub.push_back((*ids)[old]);
    attrs.original_ids = std::move(sub);
  }
  Graph graph(sorted.size(), std::move(edges), std::move(attrs));
  return {std::move(graph), std::move(sorted), std::move(old_to_new)};
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    if (delim == ' ' && field.empty()) continue;
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_int64(const std::string& s, std::int64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<ContactRecord> parse_contact_records(std::istream& in) {
  std::vector<ContactRecord> records;
  std::string line;
  std::size_t lineno = 0;
  char delim = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
    auto fields = split_fields(line, delim);
    for (auto& f : fields) f = trim(f);
    if (fields.size() != 5)
      throw ParseError("expected 5 fields (timestamp,i,j,class_i,class_j), got " +
                           std::to_string(fields.size()),
                       lineno);
    ContactRecord rec;
    const bool numeric = parse_int64(fields[0], rec.timestamp);
    if (!numeric && first_data) {
      first_data = false;  // header
      continue;
    }
    first_data = false;
    if (!numeric) throw ParseError("bad timestamp '" + fields[0] + "'", lineno);
    if (!parse_int64(fields[1], rec.i)) throw ParseError("bad node id '" + fields[1] + "'", lineno);
    if (!parse_int64(fields[2], rec.j)) throw ParseError("bad node id '" + fields[2] + "'", lineno);
    if (fields[3].empty() || fields[4].empty()) throw ParseError("empty class label", lineno);
    rec.class_i = fields[3];
    rec.class_j = fields[4];
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::vector<ContactRecord>> split_records_by_day(
    std::span<const ContactRecord> records, std::int64_t day_seconds) {
  if (day_seconds <= 0) throw InvalidArgument("day_seconds must be positive");
  std::map<std::int64_t, std::vector<ContactRecord>> by_day;
  for (const auto& r : records) {
    auto day = r.timestamp / day_seconds;
    if (r.timestamp < 0 && r.timestamp % day_seconds != 0) --day;
    by_day[day].push_back(r);
  }
  std::vector<std::vector<ContactRecord>> out;
  for (auto& [day, recs] : by_day) out.push_back(std::move(recs));
  return out;
}

Graph load_contact_graph(std::span<const ContactRecord> records, int min_contacts,
                         std::string id) {
  std::map<std::int64_t, std::string> class_of;
  std::map<std::pair<std::int64_t, std::int64_t>, int> counts;
  auto note_class = [&](std::int64_t node, const std::string& cls) {
    auto [it, inserted] = class_of.emplace(node, cls);
    if (!inserted && it->second != cls)
      throw Error("node " + std::to_string(node) + " has inconsistent class labels '" +
                  it->second + "' and '" + cls + "'");
  };
  for (const auto& r : records) {
    note_class(r.i, r.class_i);
    note_class(r.j, r.class_j);
    if (r.i == r.j) continue;
    counts[{std::min(r.i, r.j), std::max(r.i, r.j)}] += 1;
  }

  std::set<std::int64_t> kept;
  std::vector<std::pair<std::int64_t, std::int64_t>> raw_edges;
  for (const auto& [pair, c] : counts) {
    if (c > min_contacts) {
      raw_edges.push_back(pair);
      kept.insert(pair.first);
      kept.insert(pair.second);
    }
  }
  if (kept.empty()) throw Error("contact graph has no qualifying edges");

  std::map<std::int64_t, NodeId> index;
  GraphAttributes attrs;
  attrs.id = std::move(id);
  attrs.node_classes.emplace();
  attrs.original_ids.emplace();
  for (auto node : kept) {
    index.emplace(node, index.size());
    attrs.node_classes->push_back(class_of.at(node));
    attrs.original_ids->push_back(node);
  }
  std::vector<Edge> edges;
  edges.reserve(raw_edges.size());
  for (const auto& [a, b] : raw_edges) edges.emplace_back(index.at(a), index.at(b));
  return Graph(kept.size(), std::move(edges), std::move(attrs));
}

std::vector<ContactRecord> contact_records_from_graph(const Graph& g, int min_contacts) {
  if (!g.node_classes()) throw InvalidArgument("graph has no node classes");
  const auto& cls = *g.node_classes();
  std::vector<ContactRecord> out;
  std::int64_t ts = 0;
  for (const auto& [a, b] : g.edges()) {
    const std::int64_t ia = g.original_ids() ? (*g.original_ids())[a] : std::int64_t(a);
    const std::int64_t ib = g.original_ids() ? (*g.original_ids())[b] : std::int64_t(b);
    for (int k = 0; k <= min_contacts; ++k)
      out.push_back({ts += 20, ia, ib, cls[a], cls[b]});
  }
  return out;
}

}  // namespace netdemix
