#include "netdemix/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "netdemix/errors.hpp"
#include "netdemix/graph_io.hpp"

namespace netdemix {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Density: return "density";
    case ExperimentKind::Size: return "size";
    case ExperimentKind::TrainSize: return "trainsize";
    case ExperimentKind::School: return "school";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Density, ExperimentKind::Size, ExperimentKind::TrainSize,
                 ExperimentKind::School})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown experiment kind '" + s + "' (density, size, trainsize, school)");
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw InvalidArgument("config: no models selected");
  if (graph.n < 1) throw InvalidArgument("config: graph.n must be >= 1");
  if (graph.radius < 0) throw InvalidArgument("config: graph.radius must be >= 0");
  sirs.validate();
  if (horizons.empty()) throw InvalidArgument("config: T must list at least one horizon");
  for (auto T : horizons)
    if (T < 1) throw InvalidArgument("config: T must be >= 1");
  if (train_samples < 1 || test_samples < 1) throw InvalidArgument("config: sample counts must be >= 1");
  if (sources < 1) throw InvalidArgument("config: data.sources must be >= 1");
  if (test_sizes.size() != test_radii.size())
    throw InvalidArgument("config: test.sizes and test.radii must have equal length");
  weights.validate();
  if (num_draws < 1) throw InvalidArgument("config: eval.num_draws must be >= 1");
  if (seeds.empty()) throw InvalidArgument("config: seeds must not be empty");
  train_settings(0).validate();
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("config: train.validation_fraction must lie in [0, 1)");
}

TrainSettings ExperimentConfig::train_settings(std::uint64_t seed) const {
  TrainSettings s;
  s.adam = adam;
  s.batch_size = batch_size;
  s.max_epochs = max_epochs;
  s.patience = patience;
  s.seed = seed;
  s.float32_params = precision == Precision::F32;
  return s;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw InvalidArgument("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

template <typename T>
std::vector<T> parse_numbers(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "': expected true/false, got '" + v + "'");
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(xs[k]);
    else
      out += std::to_string(xs[k]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment", {[](C& c, S, S v) { c.experiment = parse_experiment_kind(v); },
                      [](const C& c) { return to_string(c.experiment); }}},
      {"models", {[](C& c, S k, S v) {
                    c.models.clear();
                    for (const auto& m : split_list(v)) c.models.push_back(parse_model_kind(m));
                    if (c.models.empty()) throw InvalidArgument("config key '" + k + "': empty list");
                  },
                  [](const C& c) {
                    std::string out;
                    for (std::size_t i = 0; i < c.models.size(); ++i)
                      out += (i ? "," : "") + to_string(c.models[i]);
                    return out;
                  }}},
      {"graph.n", {[](C& c, S k, S v) { c.graph.n = parse_number<std::size_t>(k, v); },
                   [](const C& c) { return std::to_string(c.graph.n); }}},
      {"graph.radius", {[](C& c, S k, S v) { c.graph.radius = parse_number<double>(k, v); },
                        [](const C& c) { return format_double(c.graph.radius); }}},
      {"graph.dimension", {[](C& c, S k, S v) { c.graph.dimension = parse_number<int>(k, v); },
                           [](const C& c) { return std::to_string(c.graph.dimension); }}},
      {"graph.seed", {[](C& c, S k, S v) { c.graph.seed = parse_number<std::uint64_t>(k, v); },
                      [](const C& c) { return std::to_string(c.graph.seed); }}},
      {"graph.contacts", {[](C& c, S, S v) { c.contacts_path = v; },
                          [](const C& c) { return c.contacts_path; }}},
      {"graph.min_contacts", {[](C& c, S k, S v) { c.min_contacts = parse_number<int>(k, v); },
                              [](const C& c) { return std::to_string(c.min_contacts); }}},
      {"graph.drop_classes", {[](C& c, S k, S v) { c.drop_classes = parse_number<std::size_t>(k, v); },
                              [](const C& c) { return std::to_string(c.drop_classes); }}},
      {"test.density_mults", {[](C& c, S k, S v) { c.density_mults = parse_numbers<double>(k, v); },
                              [](const C& c) { return join(c.density_mults); }}},
      {"test.sizes", {[](C& c, S k, S v) { c.test_sizes = parse_numbers<std::size_t>(k, v); },
                      [](const C& c) { return join(c.test_sizes); }}},
      {"test.radii", {[](C& c, S k, S v) { c.test_radii = parse_numbers<double>(k, v); },
                      [](const C& c) { return join(c.test_radii); }}},
      {"sirs.beta", {[](C& c, S k, S v) { c.sirs.beta = parse_number<double>(k, v); },
                     [](const C& c) { return format_double(c.sirs.beta); }}},
      {"sirs.delta", {[](C& c, S k, S v) { c.sirs.delta = parse_number<double>(k, v); },
                      [](const C& c) { return format_double(c.sirs.delta); }}},
      {"sirs.gamma", {[](C& c, S k, S v) { c.sirs.gamma = parse_number<double>(k, v); },
                      [](const C& c) { return format_double(c.sirs.gamma); }}},
      {"T", {[](C& c, S k, S v) { c.horizons = parse_numbers<std::size_t>(k, v); },
             [](const C& c) { return join(c.horizons); }}},
      {"data.train_samples", {[](C& c, S k, S v) { c.train_samples = parse_number<std::size_t>(k, v); },
                              [](const C& c) { return std::to_string(c.train_samples); }}},
      {"data.test_samples", {[](C& c, S k, S v) { c.test_samples = parse_number<std::size_t>(k, v); },
                             [](const C& c) { return std::to_string(c.test_samples); }}},
      {"data.sources", {[](C& c, S k, S v) { c.sources = parse_number<std::size_t>(k, v); },
                        [](const C& c) { return std::to_string(c.sources); }}},
      {"trainsize.grid", {[](C& c, S k, S v) { c.train_size_grid = parse_numbers<std::size_t>(k, v); },
                          [](const C& c) { return join(c.train_size_grid); }}},
      {"loss.eta1", {[](C& c, S k, S v) { c.weights.eta1 = parse_number<double>(k, v); },
                     [](const C& c) { return format_double(c.weights.eta1); }}},
      {"loss.eta2", {[](C& c, S k, S v) { c.weights.eta2 = parse_number<double>(k, v); },
                     [](const C& c) { return format_double(c.weights.eta2); }}},
      {"loss.eta3", {[](C& c, S k, S v) { c.weights.eta3 = parse_number<double>(k, v); },
                     [](const C& c) { return format_double(c.weights.eta3); }}},
      {"loss.sigma_y_sq", {[](C& c, S k, S v) { c.weights.sigma_y_sq = parse_number<double>(k, v); },
                           [](const C& c) { return format_double(c.weights.sigma_y_sq); }}},
      {"model.pool_connectivity", {[](C& c, S, S v) { c.pool = parse_pool_connectivity(v); },
                                   [](const C& c) { return to_string(c.pool); }}},
      {"optim.lr", {[](C& c, S k, S v) { c.adam.lr = parse_number<double>(k, v); },
                    [](const C& c) { return format_double(c.adam.lr); }}},
      {"optim.beta1", {[](C& c, S k, S v) { c.adam.beta1 = parse_number<double>(k, v); },
                       [](const C& c) { return format_double(c.adam.beta1); }}},
      {"optim.beta2", {[](C& c, S k, S v) { c.adam.beta2 = parse_number<double>(k, v); },
                       [](const C& c) { return format_double(c.adam.beta2); }}},
      {"optim.eps", {[](C& c, S k, S v) { c.adam.eps = parse_number<double>(k, v); },
                     [](const C& c) { return format_double(c.adam.eps); }}},
      {"train.batch_size", {[](C& c, S k, S v) { c.batch_size = parse_number<std::size_t>(k, v); },
                            [](const C& c) { return std::to_string(c.batch_size); }}},
      {"train.max_epochs", {[](C& c, S k, S v) { c.max_epochs = parse_number<std::size_t>(k, v); },
                            [](const C& c) { return std::to_string(c.max_epochs); }}},
      {"train.patience", {[](C& c, S k, S v) { c.patience = parse_number<std::size_t>(k, v); },
                          [](const C& c) { return std::to_string(c.patience); }}},
      {"train.validation_fraction",
       {[](C& c, S k, S v) { c.validation_fraction = parse_number<double>(k, v); },
        [](const C& c) { return format_double(c.validation_fraction); }}},
      {"eval.num_draws", {[](C& c, S k, S v) { c.num_draws = parse_number<std::size_t>(k, v); },
                          [](const C& c) { return std::to_string(c.num_draws); }}},
      {"seeds", {[](C& c, S k, S v) { c.seeds = parse_numbers<std::uint64_t>(k, v); },
                 [](const C& c) { return join(c.seeds); }}},
      {"precision", {[](C& c, S k, S v) {
                       if (v == "f32") c.precision = Precision::F32;
                       else if (v == "f64") c.precision = Precision::F64;
                       else throw InvalidArgument("config key '" + k + "': expected f32 or f64");
                     },
                     [](const C& c) { return std::string(c.precision == Precision::F32 ? "f32" : "f64"); }}},
      {"report.wall_time", {[](C& c, S k, S v) { c.record_wall_time = parse_bool(k, v); },
                            [](const C& c) { return std::string(c.record_wall_time ? "true" : "false"); }}},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return &f;
  return nullptr;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw InvalidArgument("unknown config key '" + key + "'");
  f->set(cfg, key, trim(value));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg) {
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!find_field(key)) throw ParseError("unknown config key '" + key + "'", lineno);
    if (!seen.insert(key).second) throw ParseError("repeated config key '" + key + "'", lineno);
    try {
      set_config_value(cfg, key, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  return parse_config(in);
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, f] : fields()) out.push_back(name);
  return out;
}

}  // namespace netdemix
