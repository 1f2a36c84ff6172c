#include "geonet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "geonet/errors.hpp"
#include "geonet/format.hpp"
#include "geonet/rng.hpp"

namespace geonet {

void Dataset::validate() const {
  if (X.rows != Y.rows) throw DataError("dataset: X/Y row counts differ");
  if (feature_names.size() != X.cols) throw DataError("dataset: feature name count != d");
  if (target_names.size() != Y.cols) throw DataError("dataset: target name count != m");
  if (!X.all_finite() || !Y.all_finite()) throw DataError("dataset: non-finite entries");
}

double function_target(double x) {
  const double a = (x - 0.3) * (x - 0.3) + 0.01;
  const double b = (x - 0.9) * (x - 0.9) + 0.04;
  return 1.0 / a + 1.0 / b - 6.0;
}

Dataset gen_function(std::size_t n, std::uint64_t seed, Sampling sampling) {
  if (n < 2) throw ConfigError("gen_function: n must be >= 2");
  Dataset ds;
  ds.X = Matrix(n, 1);
  ds.Y = Matrix(n, 1);
  ds.feature_names = {"x"};
  ds.target_names = {"y"};
  rng::Stream stream(rng::derive(seed, {rng::kSampleTag}));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sampling == Sampling::Grid
                         ? static_cast<double>(i) / static_cast<double>(n - 1)
                         : stream.next_unit();
    ds.X(i, 0) = x;
    ds.Y(i, 0) = function_target(x);
  }
  ds.validate();
  return ds;
}

std::vector<ColumnRange> grinding_surrogate_ranges() {
  return {
      {40.0, 120.0}, // R1: fresh ore feed rate, t/h
      {20.0, 60.0},  // R2: mill inlet water flow rate, m^3/h
      {30.0, 70.0},  // R3: classifier overflow concentration, %
      {50.0, 90.0},  // alpha1: current through mill, A
      {10.0, 30.0},  // alpha2: current through classifier, A
  };
}

// Fixed smooth map documented in docs/grinding_surrogate.md. Unit-scaled
// inputs keep the shape independent of the physical ranges above.
double grinding_surrogate_target(double r1, double r2, double r3, double a1, double a2) {
  const auto ranges = grinding_surrogate_ranges();
  const double u1 = (r1 - ranges[0].min) / (ranges[0].max - ranges[0].min);
  const double u2 = (r2 - ranges[1].min) / (ranges[1].max - ranges[1].min);
  const double u3 = (r3 - ranges[2].min) / (ranges[2].max - ranges[2].min);
  const double u4 = (a1 - ranges[3].min) / (ranges[3].max - ranges[3].min);
  const double u5 = (a2 - ranges[4].min) / (ranges[4].max - ranges[4].min);
  return 52.0
       + 20.0 * std::exp(-4.0 * (u1 - 0.35) * (u1 - 0.35))
       - 12.0 * u2 * (1.0 - 0.5 * u3)
       + 6.0 * u3 * u3
       + 5.0 * std::tanh(2.0 * (u4 - 0.5))
       + 7.0 * u1 * u5
       - 3.0 * std::sin(std::numbers::pi * u2) * u5;
}

namespace {
// Nominal span of the surrogate target; noise_sd is expressed relative to it.
constexpr double kSurrogateSpan = 40.0;
} // namespace

Dataset gen_grinding_surrogate(const GrindingSurrogateConfig& config) {
  if (config.n < 1) throw ConfigError("gen_grinding_surrogate: n must be >= 1");
  if (config.noise_sd < 0.0) throw ConfigError("gen_grinding_surrogate: negative noise_sd");
  const auto ranges = grinding_surrogate_ranges();
  Dataset ds;
  ds.X = Matrix(config.n, ranges.size());
  ds.Y = Matrix(config.n, 1);
  ds.feature_names = {"R1", "R2", "R3", "alpha1", "alpha2"};
  ds.target_names = {"PS"};
  rng::Stream features(rng::derive(config.seed, {rng::kSampleTag}));
  rng::Stream noise(rng::derive(config.seed, {rng::kNoiseTag}));
  for (std::size_t i = 0; i < config.n; ++i) {
    for (std::size_t j = 0; j < ranges.size(); ++j)
      ds.X(i, j) = features.next_in(ranges[j].min, ranges[j].max);
    double ps = grinding_surrogate_target(ds.X(i, 0), ds.X(i, 1), ds.X(i, 2),
                                          ds.X(i, 3), ds.X(i, 4));
    if (config.noise_sd > 0.0) ps += config.noise_sd * kSurrogateSpan * noise.next_gauss();
    ds.Y(i, 0) = ps;
  }
  ds.validate();
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace

Dataset load_csv(const std::string& path, std::size_t m_targets) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file (header expected)");
  const auto header = split_fields(line);
  if (m_targets < 1) throw ConfigError("load_csv: m_targets must be >= 1");
  if (header.size() < m_targets + 1)
    throw DataError(path + ": expected at least " + std::to_string(m_targets + 1) + " columns");
  const std::size_t cols = header.size();
  const std::size_t d = cols - m_targets;

  std::vector<double> cells;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = parse_double(fields[j]);
      if (!v || !std::isfinite(*v))
        throw DataError(path + ":" + std::to_string(lineno) + ": column " +
                        std::to_string(j + 1) + ": not a finite number: '" + fields[j] + "'");
      cells.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0) throw DataError(path + ": no data rows");

  Dataset ds;
  ds.X = Matrix(rows, d);
  ds.Y = Matrix(rows, m_targets);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = cells[i * cols + j];
    for (std::size_t q = 0; q < m_targets; ++q) ds.Y(i, q) = cells[i * cols + d + q];
  }
  ds.feature_names.assign(header.begin(), header.begin() + d);
  ds.target_names.assign(header.begin() + d, header.end());
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
    if (j) out << ',';
    out << ds.feature_names[j];
  }
  for (const auto& name : ds.target_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      if (j) out << ',';
      out << fmt_double(ds.X(i, j));
    }
    for (std::size_t q = 0; q < ds.targets(); ++q) out << ',' << fmt_double(ds.Y(i, q));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<ColumnRange> column_ranges(const Matrix& M) {
  std::vector<ColumnRange> out(M.cols);
  for (std::size_t j = 0; j < M.cols; ++j) {
    double lo = M(0, j), hi = M(0, j);
    for (std::size_t i = 1; i < M.rows; ++i) {
      lo = std::min(lo, M(i, j));
      hi = std::max(hi, M(i, j));
    }
    out[j] = {lo, hi};
  }
  return out;
}

Matrix map_columns(const Matrix& M, const std::vector<ColumnRange>& rs, bool forward) {
  Matrix out(M.rows, M.cols);
  for (std::size_t i = 0; i < M.rows; ++i)
    for (std::size_t j = 0; j < M.cols; ++j)
      out(i, j) = forward ? normalize_value(M(i, j), rs[j]) : denormalize_value(M(i, j), rs[j]);
  return out;
}

} // namespace

NormStats fit_norm_stats(const Dataset& ds) {
  if (ds.size() < 1) throw DataError("fit_norm_stats: empty dataset");
  NormStats stats;
  stats.features = column_ranges(ds.X);
  stats.targets = column_ranges(ds.Y);
  return stats;
}

Dataset apply_norm_stats(const Dataset& ds, const NormStats& stats) {
  if (stats.features.size() != ds.dims() || stats.targets.size() != ds.targets())
    throw DataError("apply_norm_stats: stats shape mismatch");
  Dataset out = ds;
  out.X = map_columns(ds.X, stats.features, true);
  out.Y = map_columns(ds.Y, stats.targets, true);
  return out;
}

Dataset denormalize(const Dataset& ds, const NormStats& stats) {
  if (stats.features.size() != ds.dims() || stats.targets.size() != ds.targets())
    throw DataError("denormalize: stats shape mismatch");
  Dataset out = ds;
  out.X = map_columns(ds.X, stats.features, false);
  out.Y = map_columns(ds.Y, stats.targets, false);
  return out;
}

std::pair<Dataset, NormStats> normalize(const Dataset& ds) {
  NormStats stats = fit_norm_stats(ds);
  return {apply_norm_stats(ds, stats), stats};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split: train_fraction must be in (0, 1)");
  const std::size_t n = ds.size();
  if (n < 2) throw DataError("split: need at least 2 rows");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates with an explicit stream so the split is platform-stable.
  rng::Stream stream(rng::derive(seed, {rng::kSplitTag}));
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }

  const auto n_train = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(n)));
  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset part;
    part.X = Matrix(end - begin, ds.dims());
    part.Y = Matrix(end - begin, ds.targets());
    part.feature_names = ds.feature_names;
    part.target_names = ds.target_names;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t src = order[i];
      for (std::size_t j = 0; j < ds.dims(); ++j) part.X(i - begin, j) = ds.X(src, j);
      for (std::size_t q = 0; q < ds.targets(); ++q) part.Y(i - begin, q) = ds.Y(src, q);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n)};
}

} // namespace geonet
