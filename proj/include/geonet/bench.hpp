#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geonet/data.hpp"
#include "geonet/trainer.hpp"

namespace geonet {

// Root mean square error over all entries of equally shaped matrices.
double rmse(const Matrix& Y, const Matrix& Yhat);

// Final node count over the node budget, in [0, 1].
double node_utilization(int l_final, int l_max);

// Where the benchmark data comes from. Generators are seeded and fully
// deterministic; CSV paths are loaded once per experiment.
struct DataSourceSpec {
  enum class Kind { Function, Grinding, Csv };
  Kind kind = Kind::Function;
  std::size_t n = 2400;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::Uniform; // function generator only
  double noise_sd = 0.0;                 // grinding generator only
  std::string path;                      // csv only
  std::size_t targets = 1;               // csv only

  Dataset realize() const;
};

struct VariantSpec {
  std::string name;
  TrainConfig config; // config.seed is replaced by the per-repeat seed
};

struct ExperimentSpec {
  DataSourceSpec dataset;
  double train_fraction = 0.7;
  int repeats = 30;
  std::uint64_t base_seed = 0;
  std::vector<VariantSpec> variants;

  void validate() const;
  static ExperimentSpec from_json(const std::string& text);
  static ExperimentSpec load(const std::string& path);
  std::string to_json() const;
};

// One (variant, repeat) outcome. status "Error" records a repeat whose
// training threw; such repeats are excluded from the numeric aggregates.
struct RepeatRow {
  std::string variant;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::string status;
  int nodes = 0;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  double time_ms = 0.0;
  double utilization = 0.0;
};

struct VariantAggregate {
  std::string variant;
  int repeats = 0; // rows that trained successfully
  double mean_train_rmse = 0.0, std_train_rmse = 0.0;
  double mean_test_rmse = 0.0, std_test_rmse = 0.0;
  double mean_time_ms = 0.0, std_time_ms = 0.0;
  double mean_nodes = 0.0;
  double mean_utilization = 0.0;
  int reached_tol = 0, node_budget = 0, stalled = 0, errors = 0;
};

struct BenchReport {
  std::vector<RepeatRow> rows;
  std::vector<VariantAggregate> aggregates;
};

// Aggregates recomputed from raw rows; emit paths call this so the two tables
// can never drift apart.
std::vector<VariantAggregate> aggregate_rows(const std::vector<RepeatRow>& rows,
                                             const std::vector<std::string>& variant_order);

struct RunOptions {
  int jobs = 1;           // repeats run in parallel when > 1; results are
                          // reduced in repeat order either way
  bool zero_times = false; // suppress wall-time measurements for byte-stable
                           // reports
};

// Repeat r: seed_r = derive(base_seed, {r}); one shared split per repeat; all
// variants train on it with config.seed = seed_r so candidate streams pair up
// across variants.
BenchReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

enum class ReportFormat { Csv, Json };

std::string report_to_csv(const BenchReport& report);
std::string report_to_json(const BenchReport& report, std::optional<std::string> timestamp);
void emit_report(const BenchReport& report, ReportFormat format, const std::string& path,
                 std::optional<std::string> timestamp = std::nullopt);
BenchReport report_from_json(const std::string& text);

} // namespace geonet
