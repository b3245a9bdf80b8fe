// netdemix: graph generation, SIRS data, training, evaluation and experiment sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "netdemix/checkpoint.hpp"
#include "netdemix/config.hpp"
#include "netdemix/dataset_io.hpp"
#include "netdemix/errors.hpp"
#include "netdemix/experiment.hpp"
#include "netdemix/graph_io.hpp"
#include "netdemix/report.hpp"

namespace fs = std::filesystem;
using namespace netdemix;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> model;
  std::optional<std::size_t> t;
  std::optional<std::string> precision;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c, bool needs_out) {
  sub->add_option("--config", c.config, "flat key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed");
  auto* out = sub->add_option("--out", c.out, "output path");
  if (needs_out) out->required();
  sub->add_option("--model", c.model, "model")
      ->check(CLI::IsMember({"ddmix", "mlp", "cnn-nodes", "cnn-time"}));
  sub->add_option("--t", c.t, "observation horizon T")->check(CLI::PositiveNumber);
  sub->add_option("--precision", c.precision, "parameter precision")->check(CLI::IsMember({"f32", "f64"}));
  sub->add_option("--set", c.overrides, "config override key=value (repeatable)");
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  for (const auto& kv : c.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.model) cfg.models = {parse_model_kind(*c.model)};
  if (c.t) cfg.horizons = {*c.t};
  if (c.precision) set_config_value(cfg, "precision", *c.precision);
  cfg.validate();
  return cfg;
}

void log_line(const std::string& msg) { std::cerr << "[netdemix] " << msg << '\n'; }

int cmd_gen_graph(const Common& c, const std::string& contacts, std::size_t day) {
  ExperimentConfig cfg = resolve_config(c);
  Graph g = [&] {
    if (contacts.empty()) {
      RGGSpec spec = cfg.graph;
      if (c.seed) spec.seed = *c.seed;
      return random_geometric_graph(spec);
    }
    std::ifstream in(contacts);
    if (!in) throw IoError("cannot read " + contacts);
    const auto records = parse_contact_records(in);
    const auto days = split_records_by_day(records);
    if (day >= days.size())
      throw InvalidArgument("day " + std::to_string(day) + " out of range (" + std::to_string(days.size()) +
                            " days)");
    return load_contact_graph(days[day], cfg.min_contacts, "contacts-day" + std::to_string(day + 1));
  }();
  save_graph(g, c.out);
  std::cout << nlohmann::json{{"id", g.id()}, {"nodes", g.num_nodes()}, {"edges", g.num_edges()},
                              {"out", c.out}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_gen_data(const Common& c, const std::string& graph_dir, std::size_t samples) {
  ExperimentConfig cfg = resolve_config(c);
  const Graph g = load_graph(graph_dir);
  SourceRule rule;
  rule.count = cfg.sources;
  const std::size_t T = cfg.horizons.front();
  const std::uint64_t seed = cfg.seeds.front();
  const auto data = generate_dataset(g, cfg.sirs, T, samples ? samples : cfg.train_samples, rule, seed);
  save_dataset(data, c.out);
  std::cout << nlohmann::json{{"graph", g.id()}, {"samples", data.size()}, {"T", T}, {"seed", seed},
                              {"out", c.out}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& graph_dir, const std::string& data_path) {
  ExperimentConfig cfg = resolve_config(c);
  const Graph g = load_graph(graph_dir);
  auto data = load_dataset(data_path);
  if (data.empty()) throw InvalidArgument("dataset " + data_path + " is empty");
  const std::size_t T = data.front().obs.T;
  if (c.t && *c.t != T)
    throw DimensionError("--t " + std::to_string(*c.t) + " does not match dataset T=" + std::to_string(T));
  const GraphContext ctx = make_graph_context(g, cfg.pool);
  ModelConfig mc;
  mc.kind = cfg.models.front();
  mc.num_nodes = g.num_nodes();
  mc.T = T;
  mc.seed = cfg.seeds.front();
  mc.weights = cfg.weights;
  mc.pool = cfg.pool;
  auto model = make_model(mc);
  model->check_graph(ctx);
  auto split = split_train_validation(std::move(data), cfg.validation_fraction);
  const auto report = train(*model, ctx, split.train, split.validation, cfg.train_settings(mc.seed),
                            fs::path(c.out), [](std::size_t epoch, double tl, double vl) {
                              log_line("epoch " + std::to_string(epoch) + " train " + format_double(tl) +
                                       " val " + format_double(vl));
                            });
  std::cout << nlohmann::json{{"model", to_string(mc.kind)},
                              {"epochs", report.stopping_epoch},
                              {"best_epoch", report.best_epoch},
                              {"initial_train_loss", report.initial_train_loss},
                              {"final_train_loss", report.final_train_loss},
                              {"checkpoint", report.checkpoint_path},
                              {"digest", file_digest(fs::path(c.out) / "params.bin")}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& ckpt, const std::string& graph_dir,
             const std::string& data_path) {
  ExperimentConfig cfg = resolve_config(c);
  auto model = load_checkpoint(ckpt);
  const Graph g = load_graph(graph_dir);
  const auto data = load_dataset(data_path);
  const GraphContext ctx = make_graph_context(g, model->config().pool);
  model->check_graph(ctx);
  EvaluationOptions eo;
  eo.seed = cfg.seeds.front();
  eo.classes = g.attributes().node_classes;
  MetricsReport r = evaluate_model(*model, ctx, data, eo);
  r.experiment = "eval";
  r.model = to_string(model->kind());
  r.graph = g.id();
  r.num_nodes = g.num_nodes();
  r.T = model->horizon();
  r.seed = eo.seed;
  const std::vector<MetricsReport> reports = {r};
  if (!c.out.empty())
    export_report(reports, c.out, {{"checkpoint", ckpt}, {"digest", file_digest(fs::path(ckpt) / "params.bin")}});
  write_metrics_csv(std::vector<MetricsRow>{to_row(r)}, std::cout);
  return 0;
}

int cmd_experiment(const Common& c, const std::optional<std::string>& kind, bool save_checkpoints) {
  ExperimentConfig cfg = resolve_config(c);
  if (kind) cfg.experiment = parse_experiment_kind(*kind);
  ExperimentOptions opts;
  opts.log = log_line;
  if (save_checkpoints) opts.checkpoint_root = fs::path(c.out) / "checkpoints";
  const auto result = run_experiment(cfg, opts);
  export_report(result.reports, c.out, result.manifest);
  std::vector<MetricsRow> rows;
  for (const auto& r : result.reports) rows.push_back(to_row(r));
  std::cout << summary_table(rows);
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& inputs) {
  std::vector<MetricsRow> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    auto more = parse_metrics_csv(in);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  if (!c.out.empty()) export_rows(rows, c.out, {{"inputs", inputs}});
  std::cout << summary_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netdemix: temporal demixing of aggregated epidemic observations"};
  app.require_subcommand(1);

  Common gg, gd, tr, ev, ex, rp;
  std::string contacts;
  std::size_t day = 0;
  auto* gen_graph = app.add_subcommand("gen-graph", "generate a random geometric graph or load a contact day");
  add_common(gen_graph, gg, true);
  gen_graph->add_option("--contacts", contacts, "contact-record file instead of an RGG")->check(CLI::ExistingFile);
  gen_graph->add_option("--day", day, "0-based day of the contact records");

  std::string graph_dir, data_path, ckpt;
  std::size_t samples = 0;
  auto* gen_data = app.add_subcommand("gen-data", "simulate SIRS samples on a graph (.jsonl or .bin)");
  add_common(gen_data, gd, true);
  gen_data->add_option("--graph", graph_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
  gen_data->add_option("--samples", samples, "number of samples (default data.train_samples)");

  auto* train_cmd = app.add_subcommand("train", "train one model; --out is the checkpoint directory");
  add_common(train_cmd, tr, true);
  train_cmd->add_option("--graph", graph_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(eval_cmd, ev, false);
  eval_cmd->add_option("--checkpoint", ckpt, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--graph", graph_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);

  std::optional<std::string> kind;
  bool save_checkpoints = false;
  auto* exp_cmd = app.add_subcommand("experiment", "run a density, size, trainsize or school sweep");
  add_common(exp_cmd, ex, true);
  exp_cmd->add_option("--kind", kind, "experiment kind (overrides the config)")
      ->check(CLI::IsMember({"density", "size", "trainsize", "school"}));
  exp_cmd->add_flag("--checkpoints", save_checkpoints, "save a checkpoint per trained cell");

  std::vector<std::string> inputs;
  auto* report_cmd = app.add_subcommand("report", "summarize metrics CSVs and write plot series");
  add_common(report_cmd, rp, false);
  report_cmd->add_option("inputs", inputs, "metrics.csv files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_graph) return cmd_gen_graph(gg, contacts, day);
    if (*gen_data) return cmd_gen_data(gd, graph_dir, samples);
    if (*train_cmd) return cmd_train(tr, graph_dir, data_path);
    if (*eval_cmd) return cmd_eval(ev, ckpt, graph_dir, data_path);
    if (*exp_cmd) return cmd_experiment(ex, kind, save_checkpoints);
    if (*report_cmd) return cmd_report(rp, inputs);
  } catch (const CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
