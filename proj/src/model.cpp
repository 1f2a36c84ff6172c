#include "geonet/model.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "geonet/errors.hpp"

namespace geonet {

using nlohmann::json;

namespace {
constexpr int kSchemaVersion = 1;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
  }
  throw ConfigError("unknown activation tag");
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation: " + s);
}

double activate(Activation kind, double z) {
  if (!std::isfinite(z)) throw DataError("activate: non-finite input");
  switch (kind) {
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  throw ConfigError("unknown activation tag");
}

Vector node_output(const HiddenNode& node, const Matrix& X, Activation kind) {
  if (node.w.size() != X.cols) throw DataError("node_output: dimension mismatch");
  Vector g(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    double z = node.b;
    const double* row = X.values.data() + i * X.cols;
    for (std::size_t j = 0; j < X.cols; ++j) z += node.w[j] * row[j];
    g[i] = activate(kind, z);
  }
  return g;
}

Matrix hidden_matrix(const GeoNet& net, const Matrix& X) {
  Matrix H(X.rows, net.nodes.size());
  for (std::size_t j = 0; j < net.nodes.size(); ++j)
    H.set_col(j, node_output(net.nodes[j], X, net.activation));
  return H;
}

double normalize_value(double v, const ColumnRange& r) {
  if (r.max == r.min) return 0.5;
  return (v - r.min) / (r.max - r.min);
}

double denormalize_value(double v, const ColumnRange& r) {
  if (r.max == r.min) return r.min;
  return r.min + v * (r.max - r.min);
}

namespace {

Matrix normalize_features(const GeoNet& net, const Matrix& X_raw) {
  if (net.stats.features.empty() && net.stats.targets.empty())
    throw DataError("predict: model carries no normalization stats");
  if (X_raw.cols != net.stats.features.size())
    throw DataError("predict: feature count mismatch");
  Matrix X(X_raw.rows, X_raw.cols);
  for (std::size_t i = 0; i < X_raw.rows; ++i)
    for (std::size_t j = 0; j < X_raw.cols; ++j)
      X(i, j) = normalize_value(X_raw(i, j), net.stats.features[j]);
  return X;
}

} // namespace

Matrix predict_normalized(const GeoNet& net, const Matrix& X_raw) {
  const Matrix X = normalize_features(net, X_raw);
  const std::size_t m = net.output_dim();
  if (net.nodes.empty()) return Matrix(X.rows, m); // zero function
  if (net.beta.rows != net.nodes.size() || net.beta.cols != m)
    throw DataError("predict: beta shape does not match node count");
  return matmul(hidden_matrix(net, X), net.beta);
}

Matrix predict(const GeoNet& net, const Matrix& X_raw) {
  Matrix Y = predict_normalized(net, X_raw);
  for (std::size_t i = 0; i < Y.rows; ++i)
    for (std::size_t q = 0; q < Y.cols; ++q)
      Y(i, q) = denormalize_value(Y(i, q), net.stats.targets[q]);
  return Y;
}

namespace {

json ranges_to_json(const std::vector<ColumnRange>& rs) {
  json arr = json::array();
  for (const auto& r : rs) arr.push_back({{"min", r.min}, {"max", r.max}});
  return arr;
}

std::vector<ColumnRange> ranges_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw DataError(std::string("model document: ") + what + " is not an array");
  std::vector<ColumnRange> out;
  for (const auto& r : arr) {
    ColumnRange cr{r.at("min").get<double>(), r.at("max").get<double>()};
    if (!std::isfinite(cr.min) || !std::isfinite(cr.max))
      throw DataError(std::string("model document: non-finite ") + what);
    if (cr.min > cr.max) throw DataError(std::string("model document: min > max in ") + what);
    out.push_back(cr);
  }
  return out;
}

} // namespace

std::string serialize(const GeoNet& net) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["variant"] = net.variant;
  doc["activation"] = to_string(net.activation);
  doc["d"] = net.input_dim();
  doc["m"] = net.output_dim();
  json nodes = json::array();
  for (const auto& n : net.nodes) nodes.push_back({{"w", n.w}, {"b", n.b}});
  doc["nodes"] = std::move(nodes);
  json beta = json::array();
  for (std::size_t i = 0; i < net.beta.rows; ++i) {
    json row = json::array();
    for (std::size_t q = 0; q < net.beta.cols; ++q) row.push_back(net.beta(i, q));
    beta.push_back(std::move(row));
  }
  doc["beta"] = std::move(beta);
  doc["feature_stats"] = ranges_to_json(net.stats.features);
  doc["target_stats"] = ranges_to_json(net.stats.targets);
  doc["seed"] = net.seed;
  if (net.config_echo.empty()) {
    doc["config"] = json::object();
  } else {
    doc["config"] = json::parse(net.config_echo);
  }
  return doc.dump(2);
}

GeoNet deserialize(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw DataError(std::string("model document: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
      throw DataError("model document: missing integer schema_version");
    const int version = doc["schema_version"].get<int>();
    if (version != kSchemaVersion)
      throw DataError("model document: unsupported schema_version " + std::to_string(version));

    GeoNet net;
    net.variant = doc.at("variant").get<std::string>();
    net.activation = activation_from_string(doc.at("activation").get<std::string>());
    const auto d = doc.at("d").get<std::size_t>();
    const auto m = doc.at("m").get<std::size_t>();

    for (const auto& jn : doc.at("nodes")) {
      HiddenNode n;
      n.w = jn.at("w").get<Vector>();
      n.b = jn.at("b").get<double>();
      if (n.w.size() != d) throw DataError("model document: node dimension != d");
      for (double v : n.w)
        if (!std::isfinite(v)) throw DataError("model document: non-finite weight");
      if (!std::isfinite(n.b)) throw DataError("model document: non-finite bias");
      net.nodes.push_back(std::move(n));
    }

    const auto& jbeta = doc.at("beta");
    if (jbeta.size() != net.nodes.size())
      throw DataError("model document: beta row count does not match node count");
    net.beta = Matrix(net.nodes.size(), m);
    for (std::size_t i = 0; i < net.beta.rows; ++i) {
      const auto& row = jbeta.at(i);
      if (row.size() != m) throw DataError("model document: beta column count != m");
      for (std::size_t q = 0; q < m; ++q) {
        net.beta(i, q) = row.at(q).get<double>();
        if (!std::isfinite(net.beta(i, q))) throw DataError("model document: non-finite beta");
      }
    }

    net.stats.features = ranges_from_json(doc.at("feature_stats"), "feature_stats");
    net.stats.targets = ranges_from_json(doc.at("target_stats"), "target_stats");
    if (net.stats.features.size() != d) throw DataError("model document: feature_stats size != d");
    if (net.stats.targets.size() != m) throw DataError("model document: target_stats size != m");

    net.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("config")) net.config_echo = doc["config"].dump();
    return net;
  } catch (const json::exception& e) {
    throw DataError(std::string("model document: ") + e.what());
  }
}

void save_model(const GeoNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << serialize(net) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

GeoNet load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

} // namespace geonet
