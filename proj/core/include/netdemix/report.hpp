#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netdemix/metrics.hpp"

namespace netdemix {

/// Column order of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "experiment,model,graph,N,T,density_mult,train_samples,seed,mse,top1,top3,top5,epochs,wall_s";

/// One CSV row. Missing top-k values are empty fields.
struct MetricsRow {
  std::string experiment;
  std::string model;
  std::string graph;
  std::size_t N = 0;
  std::size_t T = 0;
  double density_mult = 1.0;
  std::size_t train_samples = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  std::optional<double> top1, top3, top5;
  std::size_t epochs = 0;
  double wall_s = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

MetricsRow to_row(const MetricsReport& r);

void write_metrics_csv(std::span<const MetricsRow> rows, std::ostream& out);
/// Inverse of write_metrics_csv; throws ParseError on malformed lines.
std::vector<MetricsRow> parse_metrics_csv(std::istream& in);

/// One point of a plot series: mean and population std of the MSE over seeds.
struct SeriesPoint {
  double x = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct Series {
  std::string name;  ///< file stem, e.g. size_ddmix_T20
  std::string x_label;
  std::vector<SeriesPoint> points;
};

/// Groups rows by (experiment, model, T). The x axis is N for size sweeps,
/// train_samples for trainsize sweeps and density_mult otherwise.
std::vector<Series> build_series(std::span<const MetricsRow> rows);

void write_series_dat(const Series& s, std::ostream& out);

/// Writes metrics.csv, manifest.json and one .dat file per series into
/// `dir`. Identical inputs give byte-identical files.
void export_report(std::span<const MetricsReport> reports, const std::filesystem::path& dir,
                   const nlohmann::json& manifest = nlohmann::json::object());

/// Same, starting from parsed rows (used by the report subcommand).
void export_rows(std::span<const MetricsRow> rows, const std::filesystem::path& dir,
                 const nlohmann::json& manifest = nlohmann::json::object());

/// Mean MSE and top-k per (experiment, graph, T, train_samples, model), as
/// an aligned text table.
std::string summary_table(std::span<const MetricsRow> rows);

}  // namespace netdemix
