#include "geonet/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "geonet/errors.hpp"
#include "geonet/format.hpp"
#include "geonet/rng.hpp"

namespace geonet {

using nlohmann::json;

double rmse(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows != Yhat.rows || Y.cols != Yhat.cols) throw DataError("rmse: shape mismatch");
  return rms_entries(subtract(Y, Yhat));
}

double node_utilization(int l_final, int l_max) {
  if (l_max < 1) throw ConfigError("node_utilization: l_max must be >= 1");
  if (l_final < 0 || l_final > l_max)
    throw ConfigError("node_utilization: l_final outside [0, l_max]");
  return static_cast<double>(l_final) / static_cast<double>(l_max);
}

Dataset DataSourceSpec::realize() const {
  switch (kind) {
    case Kind::Function: return gen_function(n, seed, sampling);
    case Kind::Grinding: return gen_grinding_surrogate({n, seed, noise_sd});
    case Kind::Csv: return load_csv(path, targets);
  }
  throw ConfigError("unknown dataset kind");
}

void ExperimentSpec::validate() const {
  if (repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("experiment: train_fraction must be in (0, 1)");
  if (variants.empty()) throw ConfigError("experiment: no variants given");
  for (const auto& v : variants) {
    if (v.name.empty()) throw ConfigError("experiment: variant with empty name");
    v.config.validate();
  }
}

namespace {

DataSourceSpec dataset_from_json(const json& j) {
  DataSourceSpec ds;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "function") {
    ds.kind = DataSourceSpec::Kind::Function;
    ds.n = j.at("n").get<std::size_t>();
    ds.seed = j.value("seed", std::uint64_t{0});
    const auto sampling = j.value("sampling", std::string("uniform"));
    if (sampling == "grid")
      ds.sampling = Sampling::Grid;
    else if (sampling == "uniform")
      ds.sampling = Sampling::Uniform;
    else
      throw ConfigError("experiment: unknown sampling '" + sampling + "'");
  } else if (kind == "grinding") {
    ds.kind = DataSourceSpec::Kind::Grinding;
    ds.n = j.at("n").get<std::size_t>();
    ds.seed = j.value("seed", std::uint64_t{0});
    ds.noise_sd = j.value("noise_sd", 0.0);
  } else if (kind == "csv") {
    ds.kind = DataSourceSpec::Kind::Csv;
    ds.path = j.at("path").get<std::string>();
    ds.targets = j.value("targets", std::size_t{1});
  } else {
    throw ConfigError("experiment: unknown dataset kind '" + kind + "'");
  }
  return ds;
}

json dataset_to_json(const DataSourceSpec& ds) {
  json j;
  switch (ds.kind) {
    case DataSourceSpec::Kind::Function:
      j["kind"] = "function";
      j["n"] = ds.n;
      j["seed"] = ds.seed;
      j["sampling"] = ds.sampling == Sampling::Grid ? "grid" : "uniform";
      break;
    case DataSourceSpec::Kind::Grinding:
      j["kind"] = "grinding";
      j["n"] = ds.n;
      j["seed"] = ds.seed;
      j["noise_sd"] = ds.noise_sd;
      break;
    case DataSourceSpec::Kind::Csv:
      j["kind"] = "csv";
      j["path"] = ds.path;
      j["targets"] = ds.targets;
      break;
  }
  return j;
}

} // namespace

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: malformed JSON: ") + e.what());
  }
  ExperimentSpec spec;
  try {
    spec.dataset = dataset_from_json(j.at("dataset"));
    spec.train_fraction = j.value("train_fraction", 0.7);
    spec.repeats = j.value("repeats", 30);
    spec.base_seed = j.value("base_seed", std::uint64_t{0});
    for (const auto& jv : j.at("variants")) {
      VariantSpec v;
      v.name = jv.at("name").get<std::string>();
      v.config = TrainConfig::from_json(jv.dump());
      spec.variants.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["dataset"] = dataset_to_json(dataset);
  j["train_fraction"] = train_fraction;
  j["repeats"] = repeats;
  j["base_seed"] = base_seed;
  json vars = json::array();
  for (const auto& v : variants) {
    json jv = json::parse(v.config.to_json());
    jv["name"] = v.name;
    vars.push_back(std::move(jv));
  }
  j["variants"] = std::move(vars);
  return j.dump(2);
}

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

// Sample standard deviation (n-1); zero when fewer than two samples.
Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double acc = 0.0;
  for (double x : xs) acc += x;
  m.mean = acc / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return m;
}

} // namespace

std::vector<VariantAggregate> aggregate_rows(const std::vector<RepeatRow>& rows,
                                             const std::vector<std::string>& variant_order) {
  std::vector<VariantAggregate> out;
  for (const auto& name : variant_order) {
    VariantAggregate agg;
    agg.variant = name;
    std::vector<double> tr, te, tm, nd, ut;
    for (const auto& r : rows) {
      if (r.variant != name) continue;
      if (r.status == "Error") {
        ++agg.errors;
        continue;
      }
      if (r.status == "ReachedTol") ++agg.reached_tol;
      if (r.status == "NodeBudget") ++agg.node_budget;
      if (r.status == "Stalled") ++agg.stalled;
      tr.push_back(r.train_rmse);
      te.push_back(r.test_rmse);
      tm.push_back(r.time_ms);
      nd.push_back(static_cast<double>(r.nodes));
      ut.push_back(r.utilization);
    }
    agg.repeats = static_cast<int>(tr.size());
    const auto m_tr = moments(tr), m_te = moments(te), m_tm = moments(tm);
    agg.mean_train_rmse = m_tr.mean;
    agg.std_train_rmse = m_tr.sd;
    agg.mean_test_rmse = m_te.mean;
    agg.std_test_rmse = m_te.sd;
    agg.mean_time_ms = m_tm.mean;
    agg.std_time_ms = m_tm.sd;
    agg.mean_nodes = moments(nd).mean;
    agg.mean_utilization = moments(ut).mean;
    out.push_back(std::move(agg));
  }
  return out;
}

namespace {

std::vector<RepeatRow> run_one_repeat(const ExperimentSpec& spec, const Dataset& base,
                                      int repeat, const RunOptions& options) {
  const std::uint64_t seed_r = rng::derive(spec.base_seed, {static_cast<std::uint64_t>(repeat)});
  const auto [train_set, test_set] = split(base, spec.train_fraction, seed_r);
  std::vector<RepeatRow> rows;
  rows.reserve(spec.variants.size());
  for (const auto& variant : spec.variants) {
    TrainConfig cfg = variant.config;
    cfg.seed = seed_r;
    RepeatRow row;
    row.variant = variant.name;
    row.repeat = repeat;
    row.seed = seed_r;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      TrainOptions topt;
      topt.record_elapsed = !options.zero_times;
      const TrainResult res = train(cfg, train_set, &test_set, topt);
      const auto t1 = std::chrono::steady_clock::now();
      row.status = to_string(res.status);
      row.nodes = static_cast<int>(res.model.node_count());
      row.train_rmse = res.final_train_rmse;
      row.test_rmse = res.final_test_rmse.value_or(0.0);
      row.time_ms = options.zero_times
                        ? 0.0
                        : std::chrono::duration<double, std::milli>(t1 - t0).count();
      row.utilization = cfg.l_max > 0 ? node_utilization(row.nodes, cfg.l_max) : 0.0;
    } catch (const std::exception&) {
      row.status = "Error";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace

BenchReport run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const Dataset base = spec.dataset.realize();

  std::vector<std::vector<RepeatRow>> per_repeat(spec.repeats);
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int r = 0; r < spec.repeats; ++r)
      per_repeat[r] = run_one_repeat(spec, base, r, options);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < spec.repeats; r = next.fetch_add(1))
          per_repeat[r] = run_one_repeat(spec, base, r, options);
      });
    }
    for (auto& th : pool) th.join();
  }

  BenchReport report;
  for (auto& rows : per_repeat)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  std::vector<std::string> order;
  for (const auto& v : spec.variants) order.push_back(v.name);
  report.aggregates = aggregate_rows(report.rows, order);
  return report;
}

namespace {
constexpr const char* kRawHeader =
    "variant,repeat,seed,status,nodes,train_rmse,test_rmse,time_ms,utilization";
constexpr const char* kAggHeader =
    "variant,repeats,mean_train_rmse,std_train_rmse,mean_test_rmse,std_test_rmse,"
    "mean_time_ms,std_time_ms,mean_nodes,mean_utilization,reached_tol,node_budget,"
    "stalled,errors";
} // namespace

std::string report_to_csv(const BenchReport& report) {
  std::ostringstream out;
  out << kRawHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.variant << ',' << r.repeat << ',' << r.seed << ',' << r.status << ',' << r.nodes
        << ',' << fmt_double(r.train_rmse) << ',' << fmt_double(r.test_rmse) << ','
        << fmt_double(r.time_ms) << ',' << fmt_double(r.utilization) << '\n';
  }
  out << '\n' << kAggHeader << '\n';
  for (const auto& a : report.aggregates) {
    out << a.variant << ',' << a.repeats << ',' << fmt_double(a.mean_train_rmse) << ','
        << fmt_double(a.std_train_rmse) << ',' << fmt_double(a.mean_test_rmse) << ','
        << fmt_double(a.std_test_rmse) << ',' << fmt_double(a.mean_time_ms) << ','
        << fmt_double(a.std_time_ms) << ',' << fmt_double(a.mean_nodes) << ','
        << fmt_double(a.mean_utilization) << ',' << a.reached_tol << ',' << a.node_budget
        << ',' << a.stalled << ',' << a.errors << '\n';
  }
  return out.str();
}

std::string report_to_json(const BenchReport& report, std::optional<std::string> timestamp) {
  json j;
  if (timestamp) j["generated_at"] = *timestamp;
  j["valid"] = !report.rows.empty();
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"variant", r.variant},
                    {"repeat", r.repeat},
                    {"seed", r.seed},
                    {"status", r.status},
                    {"nodes", r.nodes},
                    {"train_rmse", r.train_rmse},
                    {"test_rmse", r.test_rmse},
                    {"time_ms", r.time_ms},
                    {"utilization", r.utilization}});
  }
  j["rows"] = std::move(rows);
  json aggs = json::array();
  for (const auto& a : report.aggregates) {
    aggs.push_back({{"variant", a.variant},
                    {"repeats", a.repeats},
                    {"mean_train_rmse", a.mean_train_rmse},
                    {"std_train_rmse", a.std_train_rmse},
                    {"mean_test_rmse", a.mean_test_rmse},
                    {"std_test_rmse", a.std_test_rmse},
                    {"mean_time_ms", a.mean_time_ms},
                    {"std_time_ms", a.std_time_ms},
                    {"mean_nodes", a.mean_nodes},
                    {"mean_utilization", a.mean_utilization},
                    {"reached_tol", a.reached_tol},
                    {"node_budget", a.node_budget},
                    {"stalled", a.stalled},
                    {"errors", a.errors}});
  }
  j["aggregates"] = std::move(aggs);
  return j.dump(2);
}

void emit_report(const BenchReport& report, ReportFormat format, const std::string& path,
                 std::optional<std::string> timestamp) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << (format == ReportFormat::Csv ? report_to_csv(report)
                                      : report_to_json(report, std::move(timestamp)));
  out << (format == ReportFormat::Json ? "\n" : "");
  if (!out) throw IoError("write failed: " + path);
}

BenchReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("report: malformed JSON: ") + e.what());
  }
  BenchReport report;
  try {
    for (const auto& jr : j.at("rows")) {
      RepeatRow r;
      r.variant = jr.at("variant").get<std::string>();
      r.repeat = jr.at("repeat").get<int>();
      r.seed = jr.at("seed").get<std::uint64_t>();
      r.status = jr.at("status").get<std::string>();
      r.nodes = jr.at("nodes").get<int>();
      r.train_rmse = jr.at("train_rmse").get<double>();
      r.test_rmse = jr.at("test_rmse").get<double>();
      r.time_ms = jr.at("time_ms").get<double>();
      r.utilization = jr.at("utilization").get<double>();
      report.rows.push_back(std::move(r));
    }
    for (const auto& ja : j.at("aggregates")) {
      VariantAggregate a;
      a.variant = ja.at("variant").get<std::string>();
      a.repeats = ja.at("repeats").get<int>();
      a.mean_train_rmse = ja.at("mean_train_rmse").get<double>();
      a.std_train_rmse = ja.at("std_train_rmse").get<double>();
      a.mean_test_rmse = ja.at("mean_test_rmse").get<double>();
      a.std_test_rmse = ja.at("std_test_rmse").get<double>();
      a.mean_time_ms = ja.at("mean_time_ms").get<double>();
      a.std_time_ms = ja.at("std_time_ms").get<double>();
      a.mean_nodes = ja.at("mean_nodes").get<double>();
      a.mean_utilization = ja.at("mean_utilization").get<double>();
      a.reached_tol = ja.at("reached_tol").get<int>();
      a.node_budget = ja.at("node_budget").get<int>();
      a.stalled = ja.at("stalled").get<int>();
      a.errors = ja.at("errors").get<int>();
      report.aggregates.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  return report;
}

} // namespace geonet
