#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geonet/data.hpp"
#include "geonet/linalg.hpp"
#include "geonet/model.hpp"
#include "geonet/rng.hpp"

namespace geonet {

enum class Variant { CfnRw, LightGcnetI, LightGcnetII };
enum class FallbackPolicy { AcceptBest, Stop };
enum class TrainStatus { ReachedTol, NodeBudget, Stalled };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(FallbackPolicy f);
FallbackPolicy fallback_from_string(const std::string& s);
std::string to_string(TrainStatus s);
TrainStatus status_from_string(const std::string& s);

// Ordered candidate-interval half-widths, scanned small to large until some
// candidate satisfies the angle constraint.
struct ScopeSchedule {
  std::vector<double> scales;

  // "a:s:b" -> the inclusive grid {a, a+s, ..., <= b}; a bare number is a
  // one-element schedule.
  static ScopeSchedule parse(const std::string& text);
  std::string to_text() const;
  void validate() const; // non-empty, positive, strictly increasing
};

struct TrainConfig {
  Variant variant = Variant::LightGcnetII;
  double tau = 0.5;
  double mu = 0.5;
  int t_max = 20;   // candidate pool size per scale
  int l_max = 100;  // node budget; 0 yields the zero-function model
  double tol = 0.05; // target training RMSE on normalized targets
  ScopeSchedule scopes;
  std::uint64_t seed = 0;
  FallbackPolicy fallback = FallbackPolicy::AcceptBest;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

// Dynamic constraint slack tau / (L^mu + tau): in (0,1), strictly decreasing
// in L, so the angle requirement loosens as the network grows.
double gamma(int L, double tau, double mu);

// Uniform node on [-lambda, lambda]^d x [-lambda, lambda]; consumes exactly
// d+1 draws in w-then-b order.
HiddenNode draw_candidate(rng::Stream& stream, std::size_t d, double lambda);

// Everything the pool selection needs to know about one candidate.
struct CandidateEvaluation {
  HiddenNode node;
  Vector g;               // hidden output on the training inputs
  Vector cos_sq;          // per-target cos^2 of the angle to the residual
  Vector margins;         // cos_sq[q] - gamma_L * ||e_q||^2
  double cac_score = 0.0; // sum of margins
  double delta_score = 0.0; // sum_q <e_q,g>^2 / ||g||^2
  bool passes = false;    // all margins >= 0
};

// Scores one candidate output vector against the residual columns. A zero
// residual column counts as trivially passing with margin 0. Throws on a
// zero-norm g; the caller discards such candidates.
CandidateEvaluation evaluate_candidate(const Vector& g, const Matrix& residual, double gamma_L);

struct SelectionResult {
  CandidateEvaluation chosen;
  double scale_used = 0.0;
  int candidates_drawn = 0;
  int candidates_passing = 0;
  bool fallback_used = false;
  bool stalled = false; // fallback == Stop and nothing passed
};

// Node-pool scan for node number `node_index` (1-based). Scans scales in
// increasing order, t_max candidates per scale, and stops at the first scale
// with a passing candidate (best aggregate margin, ties to the lowest
// candidate index). CfnRw ignores the constraint and takes the best
// delta_score at the single fixed scale.
SelectionResult select_node(const Matrix& residual, const Matrix& X,
                            const TrainConfig& config, int node_index);

// Greedy per-node output weights <e_q, g> / ||g||^2.
Vector local_beta(const Matrix& residual, const Vector& g);

// residual column q -= beta_row[q] * g.
void update_residual_local(Matrix& residual, const Vector& g, const Vector& beta_row);

// Global re-fit: beta = solve_least_squares(H, F), residual = F - H*beta.
std::pair<Matrix, Matrix> recompute_global(const Matrix& H, const Matrix& F);

struct TraceRow {
  int L = 0;
  double scale_used = 0.0;
  int candidates_drawn = 0;
  int candidates_passing = 0;
  double best_margin = 0.0;  // aggregate margin of the installed node
  double chosen_delta = 0.0; // delta score of the installed node
  double train_rmse = 0.0;
  std::optional<double> test_rmse;
  double elapsed_ms = 0.0;
  bool fallback_used = false;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  TrainStatus status = TrainStatus::NodeBudget;

  // First L whose train RMSE is at or below the threshold, if any.
  std::optional<int> first_crossing(double threshold) const;
  int fallback_steps() const;
};

void write_trace_csv(const TrainTrace& trace, const std::string& path);
std::string trace_to_csv(const TrainTrace& trace);
TrainTrace parse_trace_csv(const std::string& text);
TrainTrace load_trace_csv(const std::string& path);

struct TrainResult {
  GeoNet model;
  TrainTrace trace;
  TrainStatus status = TrainStatus::NodeBudget;
  double final_train_rmse = 0.0; // normalized targets
  std::optional<double> final_test_rmse;
};

struct TrainOptions {
  bool record_elapsed = true; // false zeroes elapsed_ms for byte-stable traces
};

// Grows the network on the raw training set. Normalization stats are fitted
// on the training split only and baked into the returned model; the optional
// test set is normalized with those stats for per-step test RMSE. Throws
// StalledError only when fallback == Stop and no candidate ever passes;
// reaching the node budget is a normal outcome.
TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset* test_set = nullptr, const TrainOptions& options = {});

// Training RMSE after a globally refit beta over each prefix of a fixed node
// sequence; entry L-1 corresponds to the first L nodes. Inputs are normalized
// the same way train() normalizes them.
std::vector<double> global_rmse_curve(const std::vector<HiddenNode>& nodes,
                                      const Dataset& train_set);

} // namespace geonet
