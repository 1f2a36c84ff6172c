#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geonet/linalg.hpp"
#include "geonet/model.hpp"

namespace geonet {

// Feature matrix X (N x d) and target matrix Y (N x m) in raw units, with
// column labels. Construction validates shape agreement and finiteness.
struct Dataset {
  Matrix X;
  Matrix Y;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;

  std::size_t size() const { return X.rows; }
  std::size_t dims() const { return X.cols; }
  std::size_t targets() const { return Y.cols; }

  void validate() const;
};

enum class Sampling { Grid, Uniform };

// One-dimensional two-peak rational benchmark on [0, 1]:
//   y = 1/((x-0.3)^2 + 0.01) + 1/((x-0.9)^2 + 0.04) - 6
// Grid sampling is equispaced (seed ignored); Uniform draws x from the seeded
// stream.
Dataset gen_function(std::size_t n, std::uint64_t seed, Sampling sampling);

double function_target(double x);

struct GrindingSurrogateConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise_sd = 0.0; // Gaussian noise on the target, in normalized units
};

// Synthetic ore-grinding stand-in: five process variables sampled uniformly on
// plant-plausible ranges and a particle-size index computed by the fixed
// formula in docs/grinding_surrogate.md (plus optional noise).
Dataset gen_grinding_surrogate(const GrindingSurrogateConfig& config);

// The published surrogate formula, noise-free; exposed so tests and external
// tools can recompute targets exactly. Inputs in raw units.
double grinding_surrogate_target(double r1, double r2, double r3, double a1, double a2);

// Raw-unit sampling ranges of the five surrogate variables, in column order.
std::vector<ColumnRange> grinding_surrogate_ranges();

// CSV with a header row; the trailing m_targets columns are targets.
Dataset load_csv(const std::string& path, std::size_t m_targets);
void save_csv(const Dataset& ds, const std::string& path);

// Min-max normalization of every column to [0, 1]; constant columns become the
// constant 0.5 and record (min, max = min).
std::pair<Dataset, NormStats> normalize(const Dataset& ds);

NormStats fit_norm_stats(const Dataset& ds);
Dataset apply_norm_stats(const Dataset& ds, const NormStats& stats);
Dataset denormalize(const Dataset& ds, const NormStats& stats);

// Seeded permutation split into ceil(fraction*N) training rows and the rest.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

} // namespace geonet
