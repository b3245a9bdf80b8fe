#include "netdemix/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "netdemix/checkpoint.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/graph_io.hpp"
#include "netdemix/rng.hpp"

namespace netdemix {

std::string density_label(double mult) {
  if (mult == 1.0) return "baseline";
  if (mult > 1.0) return "denser";
  if (mult < 1.0) return "sparser";
  return "mult-" + format_double(mult);
}

namespace {

// Substream tags below a master seed.
constexpr std::uint64_t kTrainData = 1;
constexpr std::uint64_t kTestData = 2;
constexpr std::uint64_t kModelInit = 3;
constexpr std::uint64_t kTraining = 4;
constexpr std::uint64_t kEvaluation = 5;
constexpr std::uint64_t kClassDrop = 6;

std::uint64_t derive(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) {
  return substream_seed(substream_seed(substream_seed(master, tag), a), b);
}

std::uint64_t model_index(ModelKind k) { return static_cast<std::uint64_t>(k); }

struct TestGraph {
  std::string label;
  double density_mult = 1.0;
  Graph graph;
};

struct Setting {
  Graph train_graph;
  std::vector<TestGraph> tests;
  SourceRule train_rule;
  bool with_classes = false;
  nlohmann::json notes = nlohmann::json::object();
};

Setting school_setting(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.contacts_path.empty()) throw InvalidArgument("school experiment needs graph.contacts");
  std::ifstream in(cfg.contacts_path);
  if (!in) throw IoError("cannot read contact records " + cfg.contacts_path);
  const auto records = parse_contact_records(in);
  const auto days = split_records_by_day(records);
  if (days.size() < 2)
    throw InvalidArgument("school experiment needs contact records spanning two days, found " +
                          std::to_string(days.size()));
  Graph day1 = load_contact_graph(days[0], cfg.min_contacts, "contacts-day1");
  Graph day2 = load_contact_graph(days[1], cfg.min_contacts, "contacts-day2");
  if (!day1.attributes().node_classes || !day2.attributes().node_classes)
    throw InvalidArgument("contact records carry no class labels");

  const auto& classes = *day1.attributes().node_classes;
  const std::set<std::string> uniq(classes.begin(), classes.end());
  std::vector<std::string> labels(uniq.begin(), uniq.end());
  if (cfg.drop_classes >= labels.size())
    throw InvalidArgument("graph.drop_classes leaves no training classes");
  Rng rng(derive(seed, kClassDrop));
  for (std::size_t k = 0; k < cfg.drop_classes; ++k)
    std::swap(labels[k], labels[k + rng.uniform_index(labels.size() - k)]);
  std::set<std::string> dropped(labels.begin(), labels.begin() + std::ptrdiff_t(cfg.drop_classes));

  std::vector<NodeId> keep;
  for (NodeId i = 0; i < day1.num_nodes(); ++i)
    if (!dropped.count(classes[i])) keep.push_back(i);
  Subgraph sub = induced_subgraph(day1, keep);

  Setting s{std::move(sub.graph), {}, {}, true, nlohmann::json::object()};
  s.notes["dropped_classes"] = std::vector<std::string>(dropped.begin(), dropped.end());
  s.notes["day1_nodes"] = day1.num_nodes();
  s.notes["train_nodes"] = s.train_graph.num_nodes();
  s.tests.push_back({"day2", 1.0, std::move(day2)});
  return s;
}

Setting rgg_setting(const ExperimentConfig& cfg, ExperimentKind kind) {
  Setting s{random_geometric_graph(cfg.graph), {}, {}, false, nlohmann::json::object()};
  auto fresh = [&](std::size_t n, double radius, std::uint64_t j) {
    RGGSpec spec = cfg.graph;
    spec.n = n;
    spec.radius = radius;
    spec.seed = substream_seed(cfg.graph.seed, j + 1);
    return random_geometric_graph(spec);
  };
  if (kind == ExperimentKind::Size) {
    for (std::size_t j = 0; j < cfg.test_sizes.size(); ++j)
      s.tests.push_back({"N" + std::to_string(cfg.test_sizes[j]), 1.0,
                         fresh(cfg.test_sizes[j], cfg.test_radii[j], j)});
  } else if (kind == ExperimentKind::Density) {
    for (std::size_t j = 0; j < cfg.density_mults.size(); ++j)
      s.tests.push_back({density_label(cfg.density_mults[j]), cfg.density_mults[j],
                         fresh(cfg.graph.n, cfg.graph.radius * cfg.density_mults[j], j)});
  } else {
    s.tests.push_back({"baseline", 1.0, fresh(cfg.graph.n, cfg.graph.radius, 0)});
  }
  return s;
}

void check_capabilities(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (std::find(cfg.models.begin(), cfg.models.end(), ModelKind::MLP) == cfg.models.end()) return;
  if (kind == ExperimentKind::Size) {
    for (auto n : cfg.test_sizes)
      if (n != cfg.graph.n)
        throw CapabilityError("mlp cannot run a size experiment: it is tied to N=" +
                              std::to_string(cfg.graph.n) + " and cannot handle inputs of varying sizes");
  }
  if (kind == ExperimentKind::School)
    throw CapabilityError("mlp cannot run the school experiment: training and test graphs differ in size");
}

nlohmann::json graph_entry(const Graph& g) {
  return {{"id", g.id()}, {"nodes", g.num_nodes()}, {"edges", g.num_edges()}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, ExperimentKind kind,
                                const ExperimentOptions& opts) {
  cfg.validate();
  check_capabilities(cfg, kind);
  auto log = [&](const std::string& msg) {
    if (opts.log) opts.log(msg);
  };

  ExperimentResult result;
  result.config = cfg;
  result.kind = kind;
  result.manifest["experiment"] = to_string(kind);
  result.manifest["config"] = to_config_text(cfg);
  result.manifest["seeds"] = cfg.seeds;
  result.manifest["cells"] = nlohmann::json::array();
  result.manifest["settings"] = nlohmann::json::array();

  std::optional<Setting> shared;
  if (kind != ExperimentKind::School) shared = rgg_setting(cfg, kind);

  for (const std::uint64_t seed : cfg.seeds) {
    std::optional<Setting> per_seed;
    if (kind == ExperimentKind::School) per_seed = school_setting(cfg, seed);
    const Setting& setting = per_seed ? *per_seed : *shared;

    nlohmann::json setting_entry = setting.notes;
    setting_entry["seed"] = seed;
    setting_entry["train_graph"] = graph_entry(setting.train_graph);
    setting_entry["test_graphs"] = nlohmann::json::array();
    for (const auto& tg : setting.tests) setting_entry["test_graphs"].push_back(graph_entry(tg.graph));
    result.manifest["settings"].push_back(setting_entry);

    const GraphContext train_ctx = make_graph_context(setting.train_graph, cfg.pool);
    std::vector<GraphContext> test_ctx;
    for (const auto& tg : setting.tests) test_ctx.push_back(make_graph_context(tg.graph, cfg.pool));

    for (const std::size_t T : cfg.horizons) {
      SourceRule rule;
      rule.count = cfg.sources;
      std::size_t pool_size = cfg.train_samples;
      if (kind == ExperimentKind::TrainSize)
        for (auto m : cfg.train_size_grid) pool_size = std::max(pool_size, m);
      log("seed " + std::to_string(seed) + " T=" + std::to_string(T) + ": simulating " +
          std::to_string(pool_size) + " training samples");
      const auto all_train = generate_dataset(setting.train_graph, cfg.sirs, T, pool_size, rule,
                                              derive(seed, kTrainData, T));
      std::vector<std::vector<Sample>> test_sets;
      for (std::size_t j = 0; j < setting.tests.size(); ++j)
        test_sets.push_back(generate_dataset(setting.tests[j].graph, cfg.sirs, T, cfg.test_samples, rule,
                                             derive(seed, kTestData, T, j)));

      std::vector<std::size_t> sizes = {cfg.train_samples};
      if (kind == ExperimentKind::TrainSize) sizes = cfg.train_size_grid;

      for (const std::size_t m : sizes) {
        std::vector<Sample> subset(all_train.begin(), all_train.begin() + std::ptrdiff_t(m));
        DatasetSplit split;
        if (m > 0) split = split_train_validation(std::move(subset), cfg.validation_fraction);

        for (const ModelKind mk : cfg.models) {
          ModelConfig mc;
          mc.kind = mk;
          mc.num_nodes = setting.train_graph.num_nodes();
          mc.T = T;
          mc.seed = derive(seed, kModelInit, model_index(mk));
          mc.weights = cfg.weights;
          mc.pool = cfg.pool;
          auto model = make_model(mc);
          model->check_graph(train_ctx);

          const std::string cell = to_string(mk) + "-s" + std::to_string(seed) + "-T" + std::to_string(T) +
                                   (kind == ExperimentKind::TrainSize ? "-m" + std::to_string(m) : "");
          TrainReport tr;
          std::optional<std::filesystem::path> ckpt;
          if (opts.checkpoint_root) ckpt = *opts.checkpoint_root / cell;
          const auto t0 = std::chrono::steady_clock::now();
          if (m > 0) {
            log("training " + cell + " on " + std::to_string(split.train.size()) + " samples");
            tr = train(*model, train_ctx, split.train, split.validation,
                       cfg.train_settings(derive(seed, kTraining, model_index(mk))), ckpt);
          } else if (ckpt) {
            save_checkpoint(*model, *ckpt);
            tr.checkpoint_path = ckpt->string();
          }
          const double train_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

          nlohmann::json cell_entry = {{"cell", cell},
                                       {"model", to_string(mk)},
                                       {"seed", seed},
                                       {"T", T},
                                       {"train_samples", m},
                                       {"epochs", tr.stopping_epoch},
                                       {"best_epoch", tr.best_epoch},
                                       {"train_losses", tr.train_losses},
                                       {"val_losses", tr.val_losses}};
          if (ckpt) cell_entry["checkpoint_digest"] = file_digest(*ckpt / "params.bin");
          result.manifest["cells"].push_back(cell_entry);

          for (std::size_t j = 0; j < setting.tests.size(); ++j) {
            EvaluationOptions eo;
            eo.seed = derive(seed, kEvaluation, model_index(mk), j);
            eo.num_draws = cfg.num_draws;
            if (setting.with_classes) eo.classes = setting.tests[j].graph.attributes().node_classes;
            MetricsReport r = evaluate_model(*model, test_ctx[j], test_sets[j], eo);
            r.experiment = to_string(kind);
            r.model = to_string(mk);
            r.graph = setting.tests[j].label;
            r.num_nodes = setting.tests[j].graph.num_nodes();
            r.T = T;
            r.density_mult = setting.tests[j].density_mult;
            r.train_samples = m;
            r.seed = seed;
            r.epochs = tr.stopping_epoch;
            r.wall_seconds = cfg.record_wall_time ? train_seconds : 0.0;
            log(cell + " on " + r.graph + ": mse " + format_double(r.mse));
            result.reports.push_back(std::move(r));
          }
        }
      }
    }
  }
  return result;
}

}  // namespace netdemix
