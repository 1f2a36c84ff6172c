#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "geonet/data.hpp"
#include "geonet/errors.hpp"

using namespace geonet;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("function generator hits the analytic values") {
  // hand-evaluated: f(0.3) = 100 + 2.5 - 6, f(0.9) = 1/0.37 + 25 - 6,
  // f(0) = 10 + 1/0.85 - 6
  CHECK(function_target(0.3) == doctest::Approx(96.5).epsilon(1e-12));
  CHECK(function_target(0.9) == doctest::Approx(21.70270270270270).epsilon(1e-12));
  CHECK(function_target(0.0) == doctest::Approx(5.176470588235294).epsilon(1e-12));
}

TEST_CASE("gen_function sampling modes") {
  const Dataset grid_a = gen_function(101, 1, Sampling::Grid);
  const Dataset grid_b = gen_function(101, 999, Sampling::Grid);
  CHECK(grid_a.X(0, 0) == 0.0);
  CHECK(grid_a.X(100, 0) == 1.0);
  for (std::size_t i = 0; i < grid_a.size(); ++i) {
    CHECK(grid_a.X(i, 0) == grid_b.X(i, 0)); // grid ignores the seed
    CHECK(grid_a.Y(i, 0) == doctest::Approx(function_target(grid_a.X(i, 0))));
  }

  const Dataset u1 = gen_function(50, 7, Sampling::Uniform);
  const Dataset u2 = gen_function(50, 7, Sampling::Uniform);
  const Dataset u3 = gen_function(50, 8, Sampling::Uniform);
  bool any_diff = false;
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(u1.X(i, 0) == u2.X(i, 0));
    CHECK(u1.X(i, 0) >= 0.0);
    CHECK(u1.X(i, 0) < 1.0);
    any_diff |= u1.X(i, 0) != u3.X(i, 0);
  }
  CHECK(any_diff);
  CHECK_THROWS_AS(gen_function(1, 0, Sampling::Grid), ConfigError);
}

TEST_CASE("grinding surrogate") {
  const Dataset ds = gen_grinding_surrogate({200, 7, 0.0});
  CHECK(ds.dims() == 5);
  CHECK(ds.targets() == 1);
  CHECK(ds.feature_names == std::vector<std::string>{"R1", "R2", "R3", "alpha1", "alpha2"});

  const auto ranges = grinding_surrogate_ranges();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(ds.X(i, j) >= ranges[j].min);
      CHECK(ds.X(i, j) <= ranges[j].max);
    }
    // noise-free targets equal the published formula exactly
    CHECK(ds.Y(i, 0) == grinding_surrogate_target(ds.X(i, 0), ds.X(i, 1), ds.X(i, 2),
                                                  ds.X(i, 3), ds.X(i, 4)));
  }

  const Dataset again = gen_grinding_surrogate({200, 7, 0.0});
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.Y(i, 0) == again.Y(i, 0));

  const Dataset noisy = gen_grinding_surrogate({200, 7, 0.02});
  bool differs = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(noisy.X(i, 0) == ds.X(i, 0)); // features unaffected by the noise stream
    differs |= noisy.Y(i, 0) != ds.Y(i, 0);
  }
  CHECK(differs);
}

TEST_CASE("csv round trip and error reporting") {
  TempFile tmp("geonet_test_data.csv");

  SUBCASE("3-column file with one target") {
    std::ofstream out(tmp.path);
    out << "a,b,t\n1.5,2.25,3.125\n-0.5,0.0625,7\n";
    out.close();
    const Dataset ds = load_csv(tmp.path, 1);
    CHECK(ds.dims() == 2);
    CHECK(ds.targets() == 1);
    CHECK(ds.size() == 2);
    CHECK(ds.X(0, 0) == 1.5);
    CHECK(ds.Y(1, 0) == 7.0);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.target_names == std::vector<std::string>{"t"});
  }

  SUBCASE("full-precision round trip") {
    Dataset ds = gen_function(64, 3, Sampling::Uniform);
    save_csv(ds, tmp.path);
    const Dataset back = load_csv(tmp.path, 1);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(back.X(i, 0) == ds.X(i, 0));
      CHECK(back.Y(i, 0) == ds.Y(i, 0));
    }
  }

  SUBCASE("NaN cell is rejected with a location") {
    std::ofstream out(tmp.path);
    out << "a,t\n1,2\nNaN,3\n";
    out.close();
    try {
      load_csv(tmp.path, 1);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":3") != std::string::npos);      // row location
      CHECK(msg.find("column 1") != std::string::npos); // column location
    }
  }

  SUBCASE("ragged row is rejected") {
    std::ofstream out(tmp.path);
    out << "a,b,t\n1,2,3\n4,5\n";
    out.close();
    CHECK_THROWS_AS(load_csv(tmp.path, 1), DataError);
  }

  SUBCASE("missing file") { CHECK_THROWS_AS(load_csv("/nonexistent/x.csv", 1), IoError); }

  SUBCASE("too few columns") {
    std::ofstream out(tmp.path);
    out << "t\n1\n";
    out.close();
    CHECK_THROWS_AS(load_csv(tmp.path, 1), DataError);
  }
}

TEST_CASE("normalize") {
  Dataset ds;
  ds.X = Matrix(3, 2);
  ds.Y = Matrix(3, 1);
  ds.feature_names = {"a", "c"};
  ds.target_names = {"t"};
  ds.X(0, 0) = 0;
  ds.X(1, 0) = 1;
  ds.X(2, 0) = 2;
  ds.X(0, 1) = ds.X(1, 1) = ds.X(2, 1) = 7; // constant column
  ds.Y(0, 0) = 10;
  ds.Y(1, 0) = 20;
  ds.Y(2, 0) = 30;

  const auto [norm, stats] = normalize(ds);
  CHECK(norm.X(0, 0) == 0.0);
  CHECK(norm.X(1, 0) == 0.5);
  CHECK(norm.X(2, 0) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(norm.X(i, 1) == 0.5); // degenerate rule
  CHECK(stats.features[1].min == stats.features[1].max);

  const Dataset back = denormalize(norm, stats);
  for (std::size_t i = 0; i < ds.X.values.size(); ++i)
    CHECK(back.X.values[i] == doctest::Approx(ds.X.values[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < ds.Y.values.size(); ++i)
    CHECK(back.Y.values[i] == doctest::Approx(ds.Y.values[i]).epsilon(1e-12));
}

TEST_CASE("split") {
  const Dataset ds = gen_function(10, 5, Sampling::Grid);
  const auto [train_set, test_set] = split(ds, 0.7, 42);
  CHECK(train_set.size() == 7);
  CHECK(test_set.size() == 3);

  const auto [t2, e2] = split(ds, 0.7, 42);
  for (std::size_t i = 0; i < 7; ++i) CHECK(train_set.X(i, 0) == t2.X(i, 0));

  // partition: the union of x values is the original multiset
  std::multiset<double> seen;
  for (std::size_t i = 0; i < train_set.size(); ++i) seen.insert(train_set.X(i, 0));
  for (std::size_t i = 0; i < test_set.size(); ++i) seen.insert(test_set.X(i, 0));
  std::multiset<double> want;
  for (std::size_t i = 0; i < ds.size(); ++i) want.insert(ds.X(i, 0));
  CHECK(seen == want);

  // row pairing survives the shuffle
  for (std::size_t i = 0; i < train_set.size(); ++i)
    CHECK(train_set.Y(i, 0) == doctest::Approx(function_target(train_set.X(i, 0))));

  CHECK_THROWS_AS(split(ds, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split(ds, 1.0, 1), ConfigError);
}
