#include "netdemix/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <set>
#include <tuple>

#include "netdemix/errors.hpp"
#include "netdemix/graph_io.hpp"

namespace netdemix {

MetricsRow to_row(const MetricsReport& r) {
  MetricsRow row;
  row.experiment = r.experiment;
  row.model = r.model;
  row.graph = r.graph;
  row.N = r.num_nodes;
  row.T = r.T;
  row.density_mult = r.density_mult;
  row.train_samples = r.train_samples;
  row.seed = r.seed;
  row.mse = r.mse;
  auto pick = [&](std::size_t k) -> std::optional<double> {
    auto it = r.topk_accuracy.find(k);
    if (it == r.topk_accuracy.end()) return std::nullopt;
    return it->second;
  };
  row.top1 = pick(1);
  row.top3 = pick(3);
  row.top5 = pick(5);
  row.epochs = r.epochs;
  row.wall_s = r.wall_seconds;
  return row;
}

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos)
    throw InvalidArgument("metrics field '" + s + "' contains a separator");
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T number(const std::string& s, std::size_t line, const char* col) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(std::string("bad value '") + s + "' in column " + col, line);
  return v;
}

std::optional<double> opt_number(const std::string& s, std::size_t line, const char* col) {
  if (s.empty()) return std::nullopt;
  return number<double>(s, line, col);
}

}  // namespace

void write_metrics_csv(std::span<const MetricsRow> rows, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.experiment);
    check_field(r.model);
    check_field(r.graph);
    out << r.experiment << ',' << r.model << ',' << r.graph << ',' << r.N << ',' << r.T << ','
        << format_double(r.density_mult) << ',' << r.train_samples << ',' << r.seed << ','
        << format_double(r.mse) << ',' << opt(r.top1) << ',' << opt(r.top3) << ',' << opt(r.top5) << ','
        << r.epochs << ',' << format_double(r.wall_s) << '\n';
  }
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty metrics file", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw ParseError("unexpected metrics header", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 14)
      throw ParseError("expected 14 fields, found " + std::to_string(f.size()), lineno);
    MetricsRow r;
    r.experiment = f[0];
    r.model = f[1];
    r.graph = f[2];
    r.N = number<std::size_t>(f[3], lineno, "N");
    r.T = number<std::size_t>(f[4], lineno, "T");
    r.density_mult = number<double>(f[5], lineno, "density_mult");
    r.train_samples = number<std::size_t>(f[6], lineno, "train_samples");
    r.seed = number<std::uint64_t>(f[7], lineno, "seed");
    r.mse = number<double>(f[8], lineno, "mse");
    r.top1 = opt_number(f[9], lineno, "top1");
    r.top3 = opt_number(f[10], lineno, "top3");
    r.top5 = opt_number(f[11], lineno, "top5");
    r.epochs = number<std::size_t>(f[12], lineno, "epochs");
    r.wall_s = number<double>(f[13], lineno, "wall_s");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Series> build_series(std::span<const MetricsRow> rows) {
  using Key = std::tuple<std::string, std::string, std::size_t>;
  std::map<Key, std::map<double, std::vector<double>>> groups;
  for (const auto& r : rows) {
    double x = r.density_mult;
    if (r.experiment == "size") x = double(r.N);
    if (r.experiment == "trainsize") x = double(r.train_samples);
    groups[{r.experiment, r.model, r.T}][x].push_back(r.mse);
  }
  std::vector<Series> out;
  for (const auto& [key, by_x] : groups) {
    const auto& [experiment, model, T] = key;
    Series s;
    s.name = experiment + "_" + model + "_T" + std::to_string(T);
    s.x_label = experiment == "size" ? "N" : experiment == "trainsize" ? "train_samples" : "density_mult";
    for (const auto& [x, values] : by_x) {
      SeriesPoint p;
      p.x = x;
      p.count = values.size();
      for (double v : values) p.mean += v;
      p.mean /= double(values.size());
      for (double v : values) p.stddev += (v - p.mean) * (v - p.mean);
      p.stddev = std::sqrt(p.stddev / double(values.size()));
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_series_dat(const Series& s, std::ostream& out) {
  out << "# " << s.name << "\n# " << s.x_label << " mse_mean mse_std seeds\n";
  for (const auto& p : s.points)
    out << format_double(p.x) << ' ' << format_double(p.mean) << ' ' << format_double(p.stddev) << ' '
        << p.count << '\n';
}

void export_rows(std::span<const MetricsRow> rows, const std::filesystem::path& dir,
                 const nlohmann::json& manifest) {
  if (rows.empty()) throw InvalidArgument("export_report: no reports");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "metrics.csv");
    write_metrics_csv(rows, f);
  }
  {
    nlohmann::json m = manifest;
    m["rows"] = rows.size();
    std::set<std::uint64_t> seeds;
    for (const auto& r : rows) seeds.insert(r.seed);
    if (!m.contains("seeds")) m["seeds"] = seeds;
    auto f = open(dir / "manifest.json");
    f << m.dump(2) << '\n';
  }
  for (const auto& s : build_series(rows)) {
    auto f = open(dir / (s.name + ".dat"));
    write_series_dat(s, f);
  }
}

void export_report(std::span<const MetricsReport> reports, const std::filesystem::path& dir,
                   const nlohmann::json& manifest) {
  std::vector<MetricsRow> rows;
  for (const auto& r : reports) rows.push_back(to_row(r));
  export_rows(rows, dir, manifest);
}

std::string summary_table(std::span<const MetricsRow> rows) {
  using Key = std::tuple<std::string, std::string, std::size_t, std::size_t, std::string>;
  struct Acc {
    double mse = 0, top1 = 0, top3 = 0, top5 = 0;
    std::size_t n = 0, nk = 0;
  };
  std::map<Key, Acc> groups;
  for (const auto& r : rows) {
    auto& a = groups[{r.experiment, r.graph, r.T, r.train_samples, r.model}];
    a.mse += r.mse;
    ++a.n;
    if (r.top1 && r.top3 && r.top5) {
      a.top1 += *r.top1;
      a.top3 += *r.top3;
      a.top5 += *r.top5;
      ++a.nk;
    }
  }
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-10s %4s %7s %-10s %9s %6s %6s %6s %5s\n", "experiment", "graph", "T",
                "train", "model", "mse", "top1", "top3", "top5", "seeds");
  out << buf;
  for (const auto& [k, a] : groups) {
    const auto& [experiment, graph, T, m, model] = k;
    std::string t1 = "-", t3 = "-", t5 = "-";
    if (a.nk) {
      auto pct = [&](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.3f", v / double(a.nk));
        return std::string(b);
      };
      t1 = pct(a.top1);
      t3 = pct(a.top3);
      t5 = pct(a.top5);
    }
    std::snprintf(buf, sizeof buf, "%-10s %-10s %4zu %7zu %-10s %9.5f %6s %6s %6s %5zu\n", experiment.c_str(),
                  graph.c_str(), T, m, model.c_str(), a.mse / double(a.n), t1.c_str(), t3.c_str(), t5.c_str(),
                  a.n);
    out << buf;
  }
  return out.str();
}

}  // namespace netdemix
