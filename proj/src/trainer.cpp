#include "geonet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>

#include "geonet/errors.hpp"
#include "geonet/format.hpp"

namespace geonet {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::CfnRw: return "cfnrw";
    case Variant::LightGcnetI: return "lightgcnet1";
    case Variant::LightGcnetII: return "lightgcnet2";
  }
  throw ConfigError("unknown variant tag");
}

Variant variant_from_string(const std::string& s) {
  if (s == "cfnrw") return Variant::CfnRw;
  if (s == "lightgcnet1") return Variant::LightGcnetI;
  if (s == "lightgcnet2") return Variant::LightGcnetII;
  throw ConfigError("unknown variant: " + s);
}

std::string to_string(FallbackPolicy f) {
  return f == FallbackPolicy::AcceptBest ? "accept_best" : "stop";
}

FallbackPolicy fallback_from_string(const std::string& s) {
  if (s == "accept_best") return FallbackPolicy::AcceptBest;
  if (s == "stop") return FallbackPolicy::Stop;
  throw ConfigError("unknown fallback policy: " + s);
}

std::string to_string(TrainStatus s) {
  switch (s) {
    case TrainStatus::ReachedTol: return "ReachedTol";
    case TrainStatus::NodeBudget: return "NodeBudget";
    case TrainStatus::Stalled: return "Stalled";
  }
  throw ConfigError("unknown status tag");
}

TrainStatus status_from_string(const std::string& s) {
  if (s == "ReachedTol") return TrainStatus::ReachedTol;
  if (s == "NodeBudget") return TrainStatus::NodeBudget;
  if (s == "Stalled") return TrainStatus::Stalled;
  throw ConfigError("unknown status: " + s);
}

ScopeSchedule ScopeSchedule::parse(const std::string& text) {
  const auto first = text.find(':');
  ScopeSchedule out;
  if (first == std::string::npos) {
    const auto v = parse_double(text);
    if (!v) throw ConfigError("scope schedule: not a number: '" + text + "'");
    out.scales = {*v};
    out.validate();
    return out;
  }
  const auto second = text.find(':', first + 1);
  if (second == std::string::npos || text.find(':', second + 1) != std::string::npos)
    throw ConfigError("scope schedule: expected 'a:s:b', got '" + text + "'");
  const auto a = parse_double(text.substr(0, first));
  const auto s = parse_double(text.substr(first + 1, second - first - 1));
  const auto b = parse_double(text.substr(second + 1));
  if (!a || !s || !b) throw ConfigError("scope schedule: bad number in '" + text + "'");
  if (*s <= 0.0) throw ConfigError("scope schedule: step must be positive");
  if (*b < *a) throw ConfigError("scope schedule: end below start");
  // a + k*s recomputed each term; the slack absorbs accumulated rounding so
  // grids like 0.5:0.1:5 still include their endpoint.
  const double eps = 1e-9 * *s;
  for (int k = 0;; ++k) {
    const double v = *a + static_cast<double>(k) * *s;
    if (v > *b + eps) break;
    out.scales.push_back(v);
  }
  out.validate();
  return out;
}

std::string ScopeSchedule::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(scales[i]);
  }
  return out;
}

void ScopeSchedule::validate() const {
  if (scales.empty()) throw ConfigError("scope schedule: empty");
  double prev = 0.0;
  for (double s : scales) {
    if (!(s > 0.0)) throw ConfigError("scope schedule: scales must be positive");
    if (s <= prev && prev != 0.0) throw ConfigError("scope schedule: scales must be strictly increasing");
    prev = s;
  }
}

void TrainConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must be in (0, 1)");
  if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("mu must be in (0, 1)");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (l_max < 0) throw ConfigError("l_max must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  scopes.validate();
  if (variant == Variant::CfnRw && scopes.scales.size() != 1)
    throw ConfigError("cfnrw uses a single fixed scale; give a one-element schedule");
}

std::string TrainConfig::to_json() const {
  json j;
  j["variant"] = to_string(variant);
  j["tau"] = tau;
  j["mu"] = mu;
  j["t_max"] = t_max;
  j["l_max"] = l_max;
  j["tol"] = tol;
  j["scopes"] = scopes.scales;
  j["seed"] = seed;
  j["fallback"] = to_string(fallback);
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: malformed JSON: ") + e.what());
  }
  TrainConfig cfg;
  try {
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (j.contains("mu")) cfg.mu = j["mu"].get<double>();
    if (j.contains("t_max")) cfg.t_max = j["t_max"].get<int>();
    if (j.contains("l_max")) cfg.l_max = j["l_max"].get<int>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fallback")) cfg.fallback = fallback_from_string(j["fallback"].get<std::string>());
    const auto& js = j.at("scopes");
    if (js.is_string()) {
      cfg.scopes = ScopeSchedule::parse(js.get<std::string>());
    } else {
      cfg.scopes.scales = js.get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

double gamma(int L, double tau, double mu) {
  if (L < 1) throw ConfigError("gamma: L must be >= 1");
  if (!(tau > 0.0 && tau < 1.0) || !(mu > 0.0 && mu < 1.0))
    throw ConfigError("gamma: tau and mu must be in (0, 1)");
  return tau / (std::pow(static_cast<double>(L), mu) + tau);
}

HiddenNode draw_candidate(rng::Stream& stream, std::size_t d, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("draw_candidate: lambda must be positive");
  HiddenNode node;
  node.w.resize(d);
  for (std::size_t j = 0; j < d; ++j) node.w[j] = stream.next_in(-lambda, lambda);
  node.b = stream.next_in(-lambda, lambda);
  return node;
}

CandidateEvaluation evaluate_candidate(const Vector& g, const Matrix& residual, double gamma_L) {
  if (g.size() != residual.rows) throw DataError("evaluate_candidate: length mismatch");
  const double g2 = norm_sq(g);
  if (g2 == 0.0) throw DataError("evaluate_candidate: zero-norm candidate output");

  const std::size_t n = residual.rows;
  const std::size_t m = residual.cols;
  CandidateEvaluation eval;
  eval.g = g;
  eval.cos_sq.assign(m, 0.0);
  eval.margins.assign(m, 0.0);
  eval.passes = true;
  for (std::size_t q = 0; q < m; ++q) {
    double ip = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = residual.values[i * m + q];
      ip += e * g[i];
      e2 += e * e;
    }
    ip /= static_cast<double>(n);
    e2 /= static_cast<double>(n);
    eval.delta_score += ip * ip / g2;
    if (e2 == 0.0) {
      // exhausted target: trivially satisfied
      eval.cos_sq[q] = 0.0;
      eval.margins[q] = 0.0;
    } else {
      eval.cos_sq[q] = ip * ip / (e2 * g2);
      eval.margins[q] = eval.cos_sq[q] - gamma_L * e2;
    }
    eval.cac_score += eval.margins[q];
    if (eval.margins[q] < 0.0) eval.passes = false;
  }
  return eval;
}

SelectionResult select_node(const Matrix& residual, const Matrix& X,
                            const TrainConfig& config, int node_index) {
  const std::size_t d = X.cols;
  const double gamma_L = gamma(node_index, config.tau, config.mu);
  const auto node_u = static_cast<std::uint64_t>(node_index);

  auto make_candidate = [&](std::size_t scale_idx, int t, double lambda)
      -> std::optional<CandidateEvaluation> {
    rng::Stream sub(rng::derive(config.seed, {node_u, scale_idx, static_cast<std::uint64_t>(t)}));
    HiddenNode node = draw_candidate(sub, d, lambda);
    Vector g = node_output(node, X);
    if (norm_sq(g) == 0.0) return std::nullopt; // degenerate, discard
    CandidateEvaluation eval = evaluate_candidate(g, residual, gamma_L);
    eval.node = std::move(node);
    return eval;
  };

  SelectionResult result;

  if (config.variant == Variant::CfnRw) {
    // Unconstrained baseline: best residual-reduction score from one pool at
    // the fixed scale.
    const double lambda = config.scopes.scales.front();
    std::optional<CandidateEvaluation> best;
    for (int t = 0; t < config.t_max; ++t) {
      auto eval = make_candidate(0, t, lambda);
      ++result.candidates_drawn;
      if (!eval) continue;
      if (eval->passes) ++result.candidates_passing;
      if (!best || eval->delta_score > best->delta_score) best = std::move(eval);
    }
    if (!best) {
      result.stalled = true;
      return result;
    }
    result.chosen = std::move(*best);
    result.scale_used = lambda;
    return result;
  }

  std::optional<CandidateEvaluation> best_any;
  double best_any_scale = 0.0;
  for (std::size_t s = 0; s < config.scopes.scales.size(); ++s) {
    const double lambda = config.scopes.scales[s];
    std::optional<CandidateEvaluation> best_passing;
    for (int t = 0; t < config.t_max; ++t) {
      auto eval = make_candidate(s, t, lambda);
      ++result.candidates_drawn;
      if (!eval) continue;
      if (eval->passes) {
        ++result.candidates_passing;
        // strict > keeps the lowest candidate index on ties
        if (!best_passing || eval->cac_score > best_passing->cac_score)
          best_passing = *eval;
      }
      if (!best_any || eval->cac_score > best_any->cac_score) {
        best_any = std::move(eval);
        best_any_scale = lambda;
      }
    }
    if (best_passing) {
      result.chosen = std::move(*best_passing);
      result.scale_used = lambda;
      return result;
    }
  }

  if (config.fallback == FallbackPolicy::AcceptBest && best_any) {
    result.chosen = std::move(*best_any);
    result.scale_used = best_any_scale;
    result.fallback_used = true;
    return result;
  }
  result.stalled = true;
  return result;
}

Vector local_beta(const Matrix& residual, const Vector& g) {
  if (norm_sq(g) == 0.0) throw DataError("local_beta: zero-norm g");
  return projection_coefficients(residual, g);
}

void update_residual_local(Matrix& residual, const Vector& g, const Vector& beta_row) {
  if (g.size() != residual.rows || beta_row.size() != residual.cols)
    throw DataError("update_residual_local: shape mismatch");
  for (std::size_t q = 0; q < residual.cols; ++q) {
    const double b = beta_row[q];
    if (b == 0.0) continue;
    for (std::size_t i = 0; i < residual.rows; ++i)
      residual.values[i * residual.cols + q] -= b * g[i];
  }
}

std::pair<Matrix, Matrix> recompute_global(const Matrix& H, const Matrix& F) {
  Matrix beta = solve_least_squares(H, F);
  Matrix residual = subtract(F, matmul(H, beta));
  return {std::move(beta), std::move(residual)};
}

namespace {

double dot(const Vector& u, const Vector& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

// Incrementally grown least-squares state: a thin QR kept orthonormal with a
// second Gram-Schmidt pass. Columns whose independent part falls below the
// column-relative rank tolerance join the span with a zero coefficient
// instead of a new basis vector, mirroring the equilibrated batch solver.
// Used by the global-refit variant so training stays O(N*L) per step instead
// of re-decomposing the whole hidden matrix.
class GrowingLs {
public:
  explicit GrowingLs(const Matrix& F) : resid_(F), m_(F.cols) {}

  static constexpr double kRankTol = 1e-10;

  void add_column(const Vector& h) {
    Vector v = h;
    Vector coeffs(basis_.size(), 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < basis_.size(); ++k) {
        const double c = dot(basis_[k], v);
        coeffs[k] += c;
        const Vector& qk = basis_[k];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * qk[i];
      }
    }
    const double hnorm = std::sqrt(dot(h, h));
    const double vnorm = std::sqrt(dot(v, v));
    if (vnorm <= kRankTol * hnorm) {
      basis_pos_.push_back(-1);
      r_.push_back(std::move(coeffs));
      return;
    }
    for (double& x : v) x /= vnorm;
    coeffs.push_back(vnorm);
    basis_pos_.push_back(static_cast<int>(basis_.size()));
    r_.push_back(std::move(coeffs));

    // project the residual onto the new direction
    Vector t(m_, 0.0);
    for (std::size_t i = 0; i < resid_.rows; ++i)
      for (std::size_t q = 0; q < m_; ++q) t[q] += v[i] * resid_.values[i * m_ + q];
    for (std::size_t i = 0; i < resid_.rows; ++i)
      for (std::size_t q = 0; q < m_; ++q) resid_.values[i * m_ + q] -= t[q] * v[i];
    rhs_.push_back(std::move(t));
    basis_.push_back(std::move(v));
  }

  const Matrix& residual() const { return resid_; }
  double rmse() const { return rms_entries(resid_); }
  std::size_t columns() const { return r_.size(); }

  // Back-substitution over the retained (independent) columns; dependent
  // columns get zero weight.
  Matrix beta() const {
    const std::size_t L = r_.size();
    const std::size_t rank = basis_.size();
    Matrix out(L, m_);
    if (rank == 0) return out;
    std::vector<std::size_t> retained;
    retained.reserve(rank);
    for (std::size_t j = 0; j < L; ++j)
      if (basis_pos_[j] >= 0) retained.push_back(j);
    for (std::size_t q = 0; q < m_; ++q) {
      Vector z(rank, 0.0);
      for (std::size_t k = rank; k-- > 0;) {
        double acc = rhs_[k][q];
        for (std::size_t p = k + 1; p < rank; ++p) acc -= r_[retained[p]][k] * z[p];
        z[k] = acc / r_[retained[k]][k];
      }
      for (std::size_t k = 0; k < rank; ++k) out(retained[k], q) = z[k];
    }
    return out;
  }

private:
  Matrix resid_;
  std::size_t m_;
  std::vector<Vector> basis_;   // orthonormal q_k
  std::vector<Vector> r_;       // per column: coefficients vs basis (+ diagonal)
  std::vector<int> basis_pos_;  // per column: basis slot or -1
  std::vector<Vector> rhs_;     // per basis vector: projection of the targets
};

double rmse_between(const Matrix& A, const Matrix& B) { return rms_entries(subtract(A, B)); }

} // namespace

std::optional<int> TrainTrace::first_crossing(double threshold) const {
  for (const auto& row : rows)
    if (row.train_rmse <= threshold) return row.L;
  return std::nullopt;
}

int TrainTrace::fallback_steps() const {
  int n = 0;
  for (const auto& row : rows) n += row.fallback_used ? 1 : 0;
  return n;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset* test_set, const TrainOptions& options) {
  config.validate();
  train_set.validate();
  if (train_set.size() < 2) throw DataError("train: need at least 2 training rows");
  if (test_set) {
    test_set->validate();
    if (test_set->dims() != train_set.dims() || test_set->targets() != train_set.targets())
      throw DataError("train: test set shape does not match training set");
  }

  const NormStats stats = fit_norm_stats(train_set);
  const Dataset tr = apply_norm_stats(train_set, stats);
  std::optional<Dataset> te;
  if (test_set) te = apply_norm_stats(*test_set, stats);

  const std::size_t m = tr.targets();
  const bool global = config.variant == Variant::LightGcnetII;

  Matrix greedy_residual = tr.Y;
  GrowingLs ls(tr.Y);
  std::vector<HiddenNode> nodes;
  std::vector<Vector> beta_rows;         // greedy variants
  std::vector<Vector> g_cols;            // global variant: accepted hidden outputs
  Matrix test_pred;                      // greedy running prediction on the test set
  Matrix test_hidden;                    // global variant: hidden outputs on the test set
  if (te) {
    test_pred = Matrix(te->size(), m);
    test_hidden = Matrix(te->size(), 0);
  }

  // For the global variant the per-step RMSE comes from the incremental QR;
  // before stopping on tolerance the batch minimum-norm solver confirms it so
  // a ReachedTol model always evaluates at or below tol.
  auto batch_refit = [&]() {
    Matrix H(tr.size(), g_cols.size());
    for (std::size_t j = 0; j < g_cols.size(); ++j) H.set_col(j, g_cols[j]);
    return recompute_global(H, tr.Y);
  };
  std::optional<Matrix> verified_beta;
  double verified_rmse = 0.0;
  std::size_t verified_at = 0;

  TrainTrace trace;
  double train_rmse = rms_entries(tr.Y);
  double gate_rmse = train_rmse;
  bool stalled = false;

  while (gate_rmse > config.tol && static_cast<int>(nodes.size()) < config.l_max) {
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix& residual = global ? ls.residual() : greedy_residual;
    SelectionResult sel = select_node(residual, tr.X, config, static_cast<int>(nodes.size()) + 1);
    if (sel.stalled) {
      if (config.fallback == FallbackPolicy::Stop) {
        stalled = true;
        break;
      }
      throw StalledError("select_node: no viable candidate"); // only degenerate pools
    }

    nodes.push_back(sel.chosen.node);
    std::optional<double> test_rmse;
    if (global) {
      ls.add_column(sel.chosen.g);
      g_cols.push_back(sel.chosen.g);
      train_rmse = ls.rmse();
      if (te) {
        const Vector gt = node_output(sel.chosen.node, te->X);
        Matrix grown(te->size(), test_hidden.cols + 1);
        for (std::size_t i = 0; i < te->size(); ++i) {
          for (std::size_t j = 0; j < test_hidden.cols; ++j) grown(i, j) = test_hidden(i, j);
          grown(i, test_hidden.cols) = gt[i];
        }
        test_hidden = std::move(grown);
        test_rmse = rmse_between(te->Y, matmul(test_hidden, ls.beta()));
      }
    } else {
      const Vector beta_row = local_beta(greedy_residual, sel.chosen.g);
      beta_rows.push_back(beta_row);
      update_residual_local(greedy_residual, sel.chosen.g, beta_row);
      train_rmse = rms_entries(greedy_residual);
      if (te) {
        const Vector gt = node_output(sel.chosen.node, te->X);
        for (std::size_t i = 0; i < te->size(); ++i)
          for (std::size_t q = 0; q < m; ++q) test_pred(i, q) += beta_row[q] * gt[i];
        test_rmse = rmse_between(te->Y, test_pred);
      }
    }

    gate_rmse = train_rmse;
    if (global && gate_rmse <= config.tol) {
      auto [vb, vr] = batch_refit();
      verified_beta = std::move(vb);
      verified_rmse = rms_entries(vr);
      verified_at = g_cols.size();
      gate_rmse = verified_rmse;
    }

    const auto t1 = std::chrono::steady_clock::now();
    TraceRow row;
    row.L = static_cast<int>(nodes.size());
    row.scale_used = sel.scale_used;
    row.candidates_drawn = sel.candidates_drawn;
    row.candidates_passing = sel.candidates_passing;
    row.best_margin = sel.chosen.cac_score;
    row.chosen_delta = sel.chosen.delta_score;
    row.train_rmse = train_rmse;
    row.test_rmse = test_rmse;
    row.fallback_used = sel.fallback_used;
    if (options.record_elapsed)
      row.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    trace.rows.push_back(std::move(row));
  }

  TrainStatus status = TrainStatus::NodeBudget;
  if (stalled)
    status = TrainStatus::Stalled;
  else if (gate_rmse <= config.tol)
    status = TrainStatus::ReachedTol;
  trace.status = status;

  GeoNet model;
  model.activation = Activation::Sigmoid;
  model.nodes = std::move(nodes);
  model.stats = stats;
  model.variant = to_string(config.variant);
  model.seed = config.seed;
  model.config_echo = config.to_json();

  double final_rmse = train_rmse;
  if (model.nodes.empty()) {
    model.beta = Matrix(0, m);
  } else if (global) {
    // Final weights always come from the batch minimum-norm solver; reuse the
    // stop-check refit when it is current.
    if (!verified_beta || verified_at != g_cols.size()) {
      auto [vb, vr] = batch_refit();
      verified_beta = std::move(vb);
      verified_rmse = rms_entries(vr);
    }
    model.beta = std::move(*verified_beta);
    final_rmse = verified_rmse;
  } else {
    model.beta = Matrix(model.nodes.size(), m);
    for (std::size_t j = 0; j < beta_rows.size(); ++j)
      for (std::size_t q = 0; q < m; ++q) model.beta(j, q) = beta_rows[j][q];
  }

  TrainResult result;
  result.trace = std::move(trace);
  result.status = status;
  result.final_train_rmse = final_rmse;
  if (test_set) {
    const Matrix yhat = predict_normalized(model, test_set->X);
    result.final_test_rmse = rmse_between(te->Y, yhat);
  }
  result.model = std::move(model);
  return result;
}

std::vector<double> global_rmse_curve(const std::vector<HiddenNode>& nodes,
                                      const Dataset& train_set) {
  const NormStats stats = fit_norm_stats(train_set);
  const Dataset tr = apply_norm_stats(train_set, stats);
  GrowingLs ls(tr.Y);
  std::vector<double> curve;
  curve.reserve(nodes.size());
  for (const auto& node : nodes) {
    ls.add_column(node_output(node, tr.X));
    curve.push_back(ls.rmse());
  }
  return curve;
}

} // namespace geonet
