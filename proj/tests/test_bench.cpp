#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geonet/bench.hpp"
#include "geonet/errors.hpp"

using namespace geonet;

namespace {

ExperimentSpec tiny_spec(int repeats) {
  ExperimentSpec spec;
  spec.dataset.kind = DataSourceSpec::Kind::Function;
  spec.dataset.n = 240;
  spec.dataset.seed = 4;
  spec.train_fraction = 0.8;
  spec.repeats = repeats;
  spec.base_seed = 314;

  VariantSpec v;
  v.name = "lightgcnet2";
  v.config.variant = Variant::LightGcnetII;
  v.config.tol = 0.05;
  v.config.l_max = 30;
  v.config.t_max = 10;
  v.config.scopes = ScopeSchedule::parse("150:10:200");
  spec.variants.push_back(v);

  VariantSpec c;
  c.name = "cfnrw";
  c.config.variant = Variant::CfnRw;
  c.config.tol = 0.05;
  c.config.l_max = 30;
  c.config.t_max = 1;
  c.config.scopes = ScopeSchedule::parse("150");
  spec.variants.push_back(c);
  return spec;
}

} // namespace

TEST_CASE("rmse") {
  Matrix y(2, 1), yhat(2, 1);
  y(0, 0) = 1;
  y(1, 0) = 1;
  CHECK(rmse(y, y) == 0.0);
  CHECK(rmse(y, yhat) == doctest::Approx(1.0));
  y(0, 0) = 3;
  y(1, 0) = 0;
  yhat(0, 0) = 0;
  yhat(1, 0) = 4;
  CHECK(rmse(y, yhat) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(Matrix(2, 1), Matrix(3, 1)), DataError);
}

TEST_CASE("node_utilization") {
  CHECK(node_utilization(200, 200) == 1.0);
  CHECK(node_utilization(0, 100) == 0.0);
  CHECK(node_utilization(41, 200) == doctest::Approx(0.205));
  CHECK_THROWS_AS(node_utilization(5, 4), ConfigError);
  CHECK_THROWS_AS(node_utilization(-1, 4), ConfigError);
  CHECK_THROWS_AS(node_utilization(0, 0), ConfigError);
}

TEST_CASE("experiment spec json round trip") {
  const ExperimentSpec spec = tiny_spec(3);
  const ExperimentSpec back = ExperimentSpec::from_json(spec.to_json());
  CHECK(back.repeats == spec.repeats);
  CHECK(back.base_seed == spec.base_seed);
  CHECK(back.train_fraction == spec.train_fraction);
  REQUIRE(back.variants.size() == 2);
  CHECK(back.variants[0].name == "lightgcnet2");
  CHECK(back.variants[0].config.scopes.scales == spec.variants[0].config.scopes.scales);
  CHECK(back.variants[1].config.variant == Variant::CfnRw);

  CHECK_THROWS_AS(ExperimentSpec::from_json("{"), ConfigError);
  CHECK_THROWS_AS(ExperimentSpec::from_json("{}"), ConfigError);
}

TEST_CASE("run_experiment: single repeat aggregates equal the raw row") {
  ExperimentSpec spec = tiny_spec(1);
  spec.variants.pop_back(); // just the global variant
  const BenchReport report = run_experiment(spec);
  REQUIRE(report.rows.size() == 1);
  REQUIRE(report.aggregates.size() == 1);
  const auto& row = report.rows[0];
  const auto& agg = report.aggregates[0];
  CHECK(agg.repeats == 1);
  CHECK(agg.mean_train_rmse == row.train_rmse);
  CHECK(agg.std_train_rmse == 0.0);
  CHECK(agg.mean_test_rmse == row.test_rmse);
  CHECK(agg.std_test_rmse == 0.0);
  CHECK(agg.mean_nodes == doctest::Approx(static_cast<double>(row.nodes)));
  CHECK(agg.mean_time_ms > 0.0); // a node was added, so time was spent
}

TEST_CASE("run_experiment: aggregates recompute from raw rows") {
  const ExperimentSpec spec = tiny_spec(4);
  const BenchReport report = run_experiment(spec);
  CHECK(report.rows.size() == 8);

  const auto again = aggregate_rows(report.rows, {"lightgcnet2", "cfnrw"});
  REQUIRE(again.size() == report.aggregates.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].mean_train_rmse == doctest::Approx(report.aggregates[i].mean_train_rmse).epsilon(1e-12));
    CHECK(again[i].std_train_rmse == doctest::Approx(report.aggregates[i].std_train_rmse).epsilon(1e-12));
    CHECK(again[i].mean_nodes == doctest::Approx(report.aggregates[i].mean_nodes).epsilon(1e-12));
  }

  // variants within a repeat share the seed (paired comparison)
  for (int r = 0; r < 4; ++r) {
    const auto& a = report.rows[2 * r];
    const auto& b = report.rows[2 * r + 1];
    CHECK(a.repeat == r);
    CHECK(b.repeat == r);
    CHECK(a.seed == b.seed);
  }
}

TEST_CASE("run_experiment: parallel repeats match sequential values") {
  const ExperimentSpec spec = tiny_spec(3);
  RunOptions seq;
  seq.zero_times = true;
  RunOptions par;
  par.jobs = 2;
  par.zero_times = true;
  const BenchReport a = run_experiment(spec, seq);
  const BenchReport b = run_experiment(spec, par);
  CHECK(report_to_csv(a) == report_to_csv(b));
}

TEST_CASE("report emission") {
  const ExperimentSpec spec = tiny_spec(2);
  const BenchReport report = run_experiment(spec, {.jobs = 1, .zero_times = true});

  SUBCASE("json round trip is field-identical") {
    const std::string text = report_to_json(report, std::nullopt);
    const BenchReport back = report_from_json(text);
    REQUIRE(back.rows.size() == report.rows.size());
    REQUIRE(back.aggregates.size() == report.aggregates.size());
    for (std::size_t i = 0; i < back.aggregates.size(); ++i) {
      CHECK(back.aggregates[i].variant == report.aggregates[i].variant);
      CHECK(back.aggregates[i].mean_train_rmse == report.aggregates[i].mean_train_rmse);
      CHECK(back.aggregates[i].std_test_rmse == report.aggregates[i].std_test_rmse);
      CHECK(back.aggregates[i].mean_nodes == report.aggregates[i].mean_nodes);
    }
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
      CHECK(back.rows[i].train_rmse == report.rows[i].train_rmse);
      CHECK(back.rows[i].seed == report.rows[i].seed);
    }
  }

  SUBCASE("csv layout: constant column counts, blank separator") {
    const std::string csv = report_to_csv(report);
    std::istringstream in(csv);
    std::string line;
    std::size_t raw_commas = std::string::npos, agg_commas = std::string::npos;
    bool in_agg = false;
    while (std::getline(in, line)) {
      if (line.empty()) {
        in_agg = true;
        continue;
      }
      const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      auto& want = in_agg ? agg_commas : raw_commas;
      if (want == std::string::npos) want = commas;
      CHECK(commas == want);
    }
    CHECK(in_agg);
  }

  SUBCASE("empty rows flagged invalid") {
    BenchReport empty;
    empty.aggregates = aggregate_rows({}, {"lightgcnet2"});
    CHECK(empty.aggregates[0].repeats == 0);
    const std::string text = report_to_json(empty, std::nullopt);
    CHECK(text.find("\"valid\": false") != std::string::npos);
  }

  SUBCASE("emit writes files") {
    const auto path = (std::filesystem::temp_directory_path() / "geonet_report.json").string();
    emit_report(report, ReportFormat::Json, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    const BenchReport back = report_from_json(ss.str());
    CHECK(back.rows.size() == report.rows.size());
    std::remove(path.c_str());
  }
}
