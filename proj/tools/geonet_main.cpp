#include <CLI11.hpp>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>

#include "geonet/bench.hpp"
#include "geonet/data.hpp"
#include "geonet/errors.hpp"
#include "geonet/format.hpp"
#include "geonet/model.hpp"
#include "geonet/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitStalled = 4;
constexpr int kExitData = 5;

std::uint64_t effective_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("GEONET_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw geonet::ConfigError("GEONET_SEED is not an unsigned integer");
    }
  }
  return flag_seed;
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct GenDataArgs {
  std::string kind;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::string sampling = "uniform";
  std::string out;
};

int run_gen_data(const GenDataArgs& args, bool noise_given) {
  const std::uint64_t seed = effective_seed(args.seed);
  geonet::Dataset ds;
  if (args.kind == "function") {
    if (noise_given && args.noise != 0.0)
      throw geonet::ConfigError("--noise applies to the grinding generator only");
    const auto sampling = args.sampling == "grid" ? geonet::Sampling::Grid
                                                  : geonet::Sampling::Uniform;
    if (args.sampling != "grid" && args.sampling != "uniform")
      throw geonet::ConfigError("--sampling must be grid or uniform");
    ds = geonet::gen_function(args.n, seed, sampling);
  } else if (args.kind == "grinding") {
    ds = geonet::gen_grinding_surrogate({args.n, seed, args.noise});
  } else {
    throw geonet::ConfigError("unknown dataset kind: " + args.kind);
  }
  geonet::save_csv(ds, args.out);
  std::cout << "wrote " << ds.size() << " rows (" << ds.dims() << " features, "
            << ds.targets() << " targets) to " << args.out << "\n";
  return kExitOk;
}

struct Preset {
  double cfnrw_lambda;
  const char* scopes;
  double tol;
  int l_max;
};

const Preset* find_preset(const std::string& name) {
  static const std::pair<const char*, Preset> table[] = {
      {"function", {150.0, "150:10:200", 0.05, 200}},
      {"winequality", {0.5, "0.5:0.1:5", 0.05, 100}},
      {"anacal", {1.0, "0.5:0.1:5", 0.05, 150}},
      {"delta_ail", {1.0, "1:10:100", 0.05, 100}},
      {"plastic", {0.5, "0.5:10:200", 0.05, 100}},
      {"compactiv", {0.5, "1:10:50", 0.05, 100}},
  };
  for (const auto& [key, preset] : table)
    if (name == key) return &preset;
  return nullptr;
}

struct TrainArgs {
  std::string data;
  std::size_t targets = 1;
  std::string variant = "lightgcnet2";
  double tau = 0.5, mu = 0.5;
  int t_max = 20, l_max = 100;
  double tol = 0.05;
  std::string scopes;
  std::uint64_t seed = 0;
  std::string fallback = "accept_best";
  double split_fraction = 0.7;
  std::string model_out, trace_out;
  std::string preset;
  bool deterministic = false;
};

int run_train(const TrainArgs& args, const CLI::App* cmd) {
  geonet::TrainConfig cfg;
  cfg.variant = geonet::variant_from_string(args.variant);
  cfg.tau = args.tau;
  cfg.mu = args.mu;
  cfg.t_max = args.t_max;
  cfg.l_max = args.l_max;
  cfg.tol = args.tol;
  cfg.seed = effective_seed(args.seed);
  cfg.fallback = geonet::fallback_from_string(args.fallback);

  std::string scopes_text = args.scopes;
  if (!args.preset.empty()) {
    const Preset* p = find_preset(args.preset);
    if (!p) throw geonet::ConfigError("unknown preset: " + args.preset);
    // presets fill whatever the user did not set explicitly
    if (cmd->count("--scopes") == 0)
      scopes_text = cfg.variant == geonet::Variant::CfnRw
                        ? geonet::fmt_double(p->cfnrw_lambda)
                        : p->scopes;
    if (cmd->count("--tol") == 0) cfg.tol = p->tol;
    if (cmd->count("--lmax") == 0) cfg.l_max = p->l_max;
    if (cmd->count("--tmax") == 0)
      cfg.t_max = cfg.variant == geonet::Variant::CfnRw ? 1 : 20;
  }
  if (scopes_text.empty())
    throw geonet::ConfigError("--scopes is required (or use --preset)");
  cfg.scopes = geonet::ScopeSchedule::parse(scopes_text);
  cfg.validate();

  const geonet::Dataset full = geonet::load_csv(args.data, args.targets);
  const auto [train_set, test_set] = geonet::split(full, args.split_fraction, cfg.seed);

  geonet::TrainOptions options;
  options.record_elapsed = !args.deterministic;
  const geonet::TrainResult result = geonet::train(cfg, train_set, &test_set, options);

  if (!args.model_out.empty()) geonet::save_model(result.model, args.model_out);
  if (!args.trace_out.empty()) geonet::write_trace_csv(result.trace, args.trace_out);

  std::cout << "status=" << geonet::to_string(result.status)
            << " nodes=" << result.model.node_count()
            << " train_rmse=" << geonet::fmt_double(result.final_train_rmse);
  if (result.final_test_rmse)
    std::cout << " test_rmse=" << geonet::fmt_double(*result.final_test_rmse);
  std::cout << "\n";
  return result.status == geonet::TrainStatus::Stalled ? kExitStalled : kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::size_t targets = 1;
};

int run_eval(const EvalArgs& args) {
  const geonet::GeoNet net = geonet::load_model(args.model);
  const geonet::Dataset ds = geonet::load_csv(args.data, args.targets);
  if (ds.dims() != net.input_dim() || ds.targets() != net.output_dim())
    throw geonet::DataError("eval: dataset shape does not match the model");

  // RMSE on normalized targets, predictions echoed in raw units
  const geonet::Matrix yhat_norm = geonet::predict_normalized(net, ds.X);
  geonet::Matrix y_norm(ds.size(), ds.targets());
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t q = 0; q < ds.targets(); ++q)
      y_norm(i, q) = geonet::normalize_value(ds.Y(i, q), net.stats.targets[q]);
  std::cout << "rmse=" << geonet::fmt_double(geonet::rmse(y_norm, yhat_norm)) << "\n";

  const geonet::Matrix yhat = geonet::predict(net, ds.X);
  std::cout << "index";
  if (ds.targets() == 1) {
    std::cout << ",y,yhat";
  } else {
    for (std::size_t q = 0; q < ds.targets(); ++q) std::cout << ",y" << q + 1;
    for (std::size_t q = 0; q < ds.targets(); ++q) std::cout << ",yhat" << q + 1;
  }
  std::cout << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::cout << i;
    for (std::size_t q = 0; q < ds.targets(); ++q)
      std::cout << ',' << geonet::fmt_double(ds.Y(i, q));
    for (std::size_t q = 0; q < ds.targets(); ++q)
      std::cout << ',' << geonet::fmt_double(yhat(i, q));
    std::cout << "\n";
  }
  return kExitOk;
}

struct BenchArgs {
  std::string spec;
  std::string out;
  int jobs = 1;
  bool deterministic = false;
};

int run_bench(const BenchArgs& args) {
  const geonet::ExperimentSpec spec = geonet::ExperimentSpec::load(args.spec);
  geonet::RunOptions options;
  options.jobs = args.jobs;
  options.zero_times = args.deterministic;
  const geonet::BenchReport report = geonet::run_experiment(spec, options);

  const bool json = args.out.size() >= 5 && args.out.substr(args.out.size() - 5) == ".json";
  std::optional<std::string> stamp;
  if (!args.deterministic) stamp = utc_timestamp();
  geonet::emit_report(report,
                      json ? geonet::ReportFormat::Json : geonet::ReportFormat::Csv,
                      args.out, stamp);

  std::cout << "variant,time_ms,train_rmse,test_rmse,nodes,utilization\n";
  for (const auto& a : report.aggregates) {
    std::cout << a.variant << ',' << geonet::fmt_double(a.mean_time_ms) << ','
              << geonet::fmt_double(a.mean_train_rmse) << ','
              << geonet::fmt_double(a.mean_test_rmse) << ','
              << geonet::fmt_double(a.mean_nodes) << ','
              << geonet::fmt_double(a.mean_utilization) << "\n";
  }
  std::cout << "report written to " << args.out << "\n";
  return kExitOk;
}

struct InspectArgs {
  std::string trace;
  std::vector<double> thresholds;
};

int run_inspect(const InspectArgs& args) {
  const geonet::TrainTrace trace = geonet::load_trace_csv(args.trace);
  std::cout << "rows=" << trace.rows.size();
  if (!trace.rows.empty()) {
    const auto& last = trace.rows.back();
    std::cout << " nodes=" << last.L
              << " final_train_rmse=" << geonet::fmt_double(last.train_rmse);
    if (last.test_rmse)
      std::cout << " final_test_rmse=" << geonet::fmt_double(*last.test_rmse);
  }
  std::cout << " status=" << geonet::to_string(trace.status)
            << " fallback_steps=" << trace.fallback_steps() << "\n";
  for (double t : args.thresholds) {
    const auto L = trace.first_crossing(t);
    std::cout << "crossing tol=" << geonet::fmt_double(t) << " L=";
    if (L)
      std::cout << *L;
    else
      std::cout << "-";
    std::cout << "\n";
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"geonet: geometric constructive networks for regression soft sensors"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a benchmark dataset CSV");
  gen_cmd->add_option("kind", gen.kind, "function | grinding")->required();
  gen_cmd->add_option("--n", gen.n, "number of rows");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  auto* noise_opt = gen_cmd->add_option("--noise", gen.noise, "target noise sd (grinding)");
  gen_cmd->add_option("--sampling", gen.sampling, "grid | uniform (function)");
  gen_cmd->add_option("--out", gen.out, "output CSV path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network on a dataset CSV");
  train_cmd->add_option("--data", tr.data, "dataset CSV")->required();
  train_cmd->add_option("--targets", tr.targets, "trailing target column count");
  train_cmd->add_option("--variant", tr.variant, "cfnrw | lightgcnet1 | lightgcnet2");
  train_cmd->add_option("--tau", tr.tau, "constraint slack numerator, in (0,1)");
  train_cmd->add_option("--mu", tr.mu, "constraint slack exponent, in (0,1)");
  train_cmd->add_option("--tmax", tr.t_max, "candidate pool size per scale");
  train_cmd->add_option("--lmax", tr.l_max, "node budget");
  train_cmd->add_option("--tol", tr.tol, "target training RMSE");
  train_cmd->add_option("--scopes", tr.scopes, "scale schedule a:s:b or a single number");
  train_cmd->add_option("--seed", tr.seed, "training seed");
  train_cmd->add_option("--fallback", tr.fallback, "accept_best | stop");
  train_cmd->add_option("--split", tr.split_fraction, "train fraction in (0,1)");
  train_cmd->add_option("--model-out", tr.model_out, "model JSON output path");
  train_cmd->add_option("--trace-out", tr.trace_out, "trace CSV output path");
  train_cmd->add_option("--preset", tr.preset,
                        "parameter preset: function | winequality | anacal | "
                        "delta_ail | plastic | compactiv");
  train_cmd->add_flag("--deterministic", tr.deterministic, "suppress wall-time fields");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset CSV");
  eval_cmd->add_option("--model", ev.model, "model JSON")->required();
  eval_cmd->add_option("--data", ev.data, "dataset CSV")->required();
  eval_cmd->add_option("--targets", ev.targets, "trailing target column count");

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Run a repeated experiment from a JSON spec");
  bench_cmd->add_option("--spec", be.spec, "experiment spec JSON")->required();
  bench_cmd->add_option("--out", be.out, "report path (.csv or .json)")->required();
  bench_cmd->add_option("--jobs", be.jobs, "parallel repeats (1 = sequential)");
  bench_cmd->add_flag("--deterministic", be.deterministic,
                      "zero wall-time fields and omit the timestamp");

  InspectArgs insp;
  auto* inspect_cmd = app.add_subcommand("inspect-trace", "Summarize a training trace CSV");
  inspect_cmd->add_option("--trace", insp.trace, "trace CSV")->required();
  inspect_cmd->add_option("--threshold", insp.thresholds,
                          "report first node count reaching this RMSE (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen, noise_opt->count() > 0);
    if (train_cmd->parsed()) return run_train(tr, train_cmd);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (bench_cmd->parsed()) return run_bench(be);
    if (inspect_cmd->parsed()) return run_inspect(insp);
  } catch (const geonet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const geonet::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const geonet::StalledError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStalled;
  } catch (const geonet::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
