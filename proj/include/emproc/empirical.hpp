#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "emproc/model.hpp"
#include "emproc/weights.hpp"

namespace emproc {

// Fraction of the column at or below x ("<=" convention: a sample point
// counts itself).
double ecdf_eval(std::span<const double> column, double x);

// Ranks, order and marginal-CDF values for one column. Two equal values in a
// column break the continuous-margin calculus and raise DataError.
struct ColumnAnalysis {
  std::vector<std::uint32_t> order;  // indices in ascending value order
  std::vector<std::uint32_t> rank;   // 1-based rank per original index
  std::vector<double> cdf;           // G_t(Y_j) per original index
};
ColumnAnalysis analyze_column(std::span<const double> column,
                              const ModelSpec& model, double t,
                              std::size_t column_index);

struct ProcessEvaluation {
  std::vector<double> beta;       // rank-residual process, values at grid points
  std::vector<double> beta_star;  // sqrt(n) * beta
  std::optional<std::vector<double>> alpha;    // centered score process
  std::optional<std::vector<double>> gamma;    // alpha + expansion-weight residual
  std::optional<std::vector<double>> lstat;    // L-statistic J_n
  std::optional<std::vector<double>> q_count;  // threshold count Q_n
};

struct LStatValues {
  std::vector<double> j_n;
  std::vector<std::size_t> q_n;
};

// beta_star(t_i) = sum_j (rank_j/n - G_t(Y_j)) q(t_i, Y_j); beta = /sqrt(n).
ProcessEvaluation residual_process(const PathSample& sample,
                                   const WeightSpec& weights);

// The q == 1 special case of the residual process, sqrt(n) scale.
std::vector<double> simple_residual_process(const PathSample& sample);

// Closed form (n+1)/2 - sum_j G_t(Y_j): the rank-sum identity route for the
// simple process. Independent of the rank computation; used as a per-
// replication exactness guard.
std::vector<double> simple_residual_closed_form(const PathSample& sample);

// alpha(t) = n^{-1/2} sum_j (g_t(Y_j) - eta(t)) with the score transform g_t.
std::vector<double> score_process(const PathSample& sample,
                                  const WeightSpec& weights,
                                  std::span<const double> eta);

// alpha + residual process under the expansion weight c'(G_t)q0 1(.<=Z).
std::vector<double> combined_process(const PathSample& sample,
                                     const WeightSpec& weights,
                                     std::span<const double> eta);

// Threshold-truncated L-statistic from the order statistics, and its rank
// form; the two agree exactly on tie-free columns.
LStatValues l_statistic(const PathSample& sample, const WeightSpec& weights);
std::vector<double> l_statistic_rank_form(const PathSample& sample,
                                          const WeightSpec& weights);

// sqrt(n)(J_n - J) - alpha - beta(expansion weight), evaluated in the
// algebraically reduced form sqrt(n)(J_n - mean_j g_t(Y_j)) - beta so the
// centering constant cancels exactly.
std::vector<double> expansion_remainder(const PathSample& sample,
                                        const WeightSpec& weights);

// Two residual processes sharing one sample (couples the replications for
// cross-covariance estimation).
std::pair<ProcessEvaluation, ProcessEvaluation> paired_residual_process(
    const PathSample& sample, const WeightSpec& w1, const WeightSpec& w2);

// One-pass driver for the Monte Carlo engine: analyzes each column once and
// fills only what is requested.
struct EvalOptions {
  bool want_alpha = false;
  bool want_gamma = false;
  bool want_lstat = false;
  bool want_remainder = false;
  std::span<const double> eta;  // required when alpha or gamma is requested
  const WeightSpec* weights2 = nullptr;  // second process weight, if paired
  bool rank_sum_guard = true;  // verify the exact identity per replication
};

struct FullEvaluation {
  ProcessEvaluation eval;
  std::vector<double> remainder;               // empty unless requested
  std::vector<double> beta_expansion;          // expansion-weight residual, 1/sqrt(n)
  std::optional<std::vector<double>> beta2;    // second process, 1/sqrt(n) scale
};

FullEvaluation evaluate_replication(const PathSample& sample,
                                    const WeightSpec& weights,
                                    const EvalOptions& options);

}  // namespace emproc
