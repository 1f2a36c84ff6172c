#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geonet/linalg.hpp"

namespace geonet {

enum class Activation { Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// activate(Sigmoid, z) = 1 / (1 + exp(-z)), strictly inside (0, 1).
double activate(Activation kind, double z);

// One random hidden node: input weights w (length d) and bias b, frozen after
// acceptance.
struct HiddenNode {
  Vector w;
  double b = 0.0;
};

// Per-sample hidden output g_i = activate(w . x_i + b).
Vector node_output(const HiddenNode& node, const Matrix& X, Activation kind = Activation::Sigmoid);

// Column min/max recorded on the training split and reused everywhere else.
struct ColumnRange {
  double min = 0.0;
  double max = 1.0;
};

struct NormStats {
  std::vector<ColumnRange> features;
  std::vector<ColumnRange> targets;
};

// A trained network. Immutable after construction; L = 0 is legal and denotes
// the zero function in normalized target space.
struct GeoNet {
  Activation activation = Activation::Sigmoid;
  std::vector<HiddenNode> nodes;
  Matrix beta; // L x m
  NormStats stats;
  std::string variant;
  std::uint64_t seed = 0;
  std::string config_echo; // JSON text of the training configuration

  std::size_t node_count() const { return nodes.size(); }
  std::size_t input_dim() const { return stats.features.size(); }
  std::size_t output_dim() const { return stats.targets.size(); }
};

// H = [g_1 ... g_L] evaluated on (already normalized) inputs, N x L.
Matrix hidden_matrix(const GeoNet& net, const Matrix& X);

// Full pipeline on raw inputs: normalize with stored stats, evaluate
// hidden_matrix * beta, then map back to raw target units.
Matrix predict(const GeoNet& net, const Matrix& X_raw);

// Same pipeline but stopping in normalized target space; what training RMSE
// and the benchmark metrics are measured against.
Matrix predict_normalized(const GeoNet& net, const Matrix& X_raw);

// JSON document I/O. Round trips are lossless: every float is written in its
// shortest round-trip-exact decimal form.
std::string serialize(const GeoNet& net);
GeoNet deserialize(const std::string& document);

void save_model(const GeoNet& net, const std::string& path);
GeoNet load_model(const std::string& path);

// Normalization helpers shared by the data pipeline.
double normalize_value(double v, const ColumnRange& r);   // constant columns map to 0.5
double denormalize_value(double v, const ColumnRange& r);

} // namespace geonet
