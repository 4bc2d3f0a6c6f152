#include "emproc/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emproc/pairwise.hpp"

namespace emproc {

double ecdf_eval(std::span<const double> column, double x) {
  if (column.empty()) throw DataError("ecdf: empty column");
  std::size_t count = 0;
  for (double v : column) count += (v <= x) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(column.size());
}

ColumnAnalysis analyze_column(std::span<const double> column,
                              const ModelSpec& model, double t,
                              std::size_t column_index) {
  const std::size_t n = column.size();
  ColumnAnalysis out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0u);
  std::sort(out.order.begin(), out.order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return column[a] < column[b]; });
  for (std::size_t k = 1; k < n; ++k) {
    if (column[out.order[k - 1]] == column[out.order[k]]) {
      std::ostringstream os;
      os << "tied values in column " << column_index << " (t=" << t
         << "): continuous marginals admit no ties";
      throw DataError(os.str());
    }
  }
  out.rank.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.rank[out.order[k]] = static_cast<std::uint32_t>(k + 1);
  }
  out.cdf.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.cdf[j] = model.marginal_cdf(t, column[j]);
  }
  return out;
}

namespace {

std::vector<double> column_buffer(const PathSample& sample, std::size_t i) {
  return sample.column(i);
}

}  // namespace

FullEvaluation evaluate_replication(const PathSample& sample,
                                    const WeightSpec& weights,
                                    const EvalOptions& options) {
  const std::size_t n = sample.n;
  const std::size_t m = sample.grid.size();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const bool need_expansion = options.want_gamma || options.want_remainder;
  if ((options.want_alpha || options.want_gamma) &&
      options.eta.size() != m) {
    throw ConfigError("evaluate_replication: score/combined process needs eta "
                      "on the full grid");
  }
  if ((options.want_alpha || options.want_gamma || options.want_lstat ||
       options.want_remainder) &&
      !weights.eta_defined()) {
    throw ConfigError("evaluate_replication: lstat block (c, q0, z) missing");
  }

  FullEvaluation out;
  out.eval.beta.resize(m);
  out.eval.beta_star.resize(m);
  if (options.want_alpha) out.eval.alpha.emplace(m);
  if (options.want_gamma) out.eval.gamma.emplace(m);
  if (options.want_lstat) {
    out.eval.lstat.emplace(m);
    out.eval.q_count.emplace(m);
  }
  if (options.want_remainder) out.remainder.resize(m);
  if (need_expansion) out.beta_expansion.resize(m);
  if (options.weights2 != nullptr) out.beta2.emplace(m);

  std::vector<double> col(n);
  std::vector<double> scratch(n);
  std::vector<double> sorted(n);

  for (std::size_t i = 0; i < m; ++i) {
    const double t = sample.grid[i];
    for (std::size_t j = 0; j < n; ++j) col[j] = sample.at(j, i);
    const ColumnAnalysis an = analyze_column(col, sample.model, t, i);

    // Direct-weight residual process.
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = static_cast<double>(an.rank[j]) / n - an.cdf[j];
      scratch[j] = gap * weights.weight_eval(t, col[j]);
    }
    const double beta_star = pairwise_sum(scratch);
    out.eval.beta_star[i] = beta_star;
    out.eval.beta[i] = beta_star / sqrt_n;

    if (options.rank_sum_guard) {
      // Exact identity for q == 1: sum of ranks/n is (n+1)/2.
      for (std::size_t j = 0; j < n; ++j) {
        scratch[j] = static_cast<double>(an.rank[j]) / n - an.cdf[j];
      }
      const double simple = pairwise_sum(scratch);
      const double closed =
          0.5 * static_cast<double>(n + 1) - pairwise_sum(an.cdf);
      if (std::fabs(simple - closed) > 1e-12 * std::max(1.0, std::fabs(closed))) {
        std::ostringstream os;
        os << "rank-sum identity violated in column " << i << ": " << simple
           << " vs " << closed;
        throw InvariantViolation(os.str());
      }
    }

    if (options.weights2 != nullptr) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gap = static_cast<double>(an.rank[j]) / n - an.cdf[j];
        scratch[j] = gap * options.weights2->weight_eval(t, col[j]);
      }
      (*out.beta2)[i] = pairwise_sum(scratch) / sqrt_n;
    }

    double beta_exp = 0.0;
    if (need_expansion) {
      const LStatSpec& ls = weights.lstat_or_throw();
      for (std::size_t j = 0; j < n; ++j) {
        const double gap = static_cast<double>(an.rank[j]) / n - an.cdf[j];
        scratch[j] = gap * expansion_weight(ls, t, col[j], an.cdf[j]);
      }
      beta_exp = pairwise_sum(scratch) / sqrt_n;
      out.beta_expansion[i] = beta_exp;
    }

    if (options.want_alpha || options.want_gamma) {
      const LStatSpec& ls = weights.lstat_or_throw();
      for (std::size_t j = 0; j < n; ++j) {
        scratch[j] = score_transform(ls, t, col[j], an.cdf[j]) - options.eta[i];
      }
      const double alpha = pairwise_sum(scratch) / sqrt_n;
      if (options.want_alpha) (*out.eval.alpha)[i] = alpha;
      if (options.want_gamma) (*out.eval.gamma)[i] = alpha + beta_exp;
    }

    if (options.want_lstat) {
      const LStatSpec& ls = weights.lstat_or_throw();
      const double z = ls.z.eval(t);
      for (std::size_t k = 0; k < n; ++k) sorted[k] = col[an.order[k]];
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), z);
      const std::size_t q_n = static_cast<std::size_t>(it - sorted.begin());
      for (std::size_t k = 0; k < q_n; ++k) {
        scratch[k] = ls.c.eval(static_cast<double>(k + 1) / n) * ls.q0.eval(sorted[k]);
      }
      (*out.eval.lstat)[i] =
          pairwise_sum(std::span<const double>(scratch.data(), q_n)) / n;
      (*out.eval.q_count)[i] = static_cast<double>(q_n);
    }

    if (options.want_remainder) {
      const LStatSpec& ls = weights.lstat_or_throw();
      const double z = ls.z.eval(t);
      // sqrt(n)(J_n - mean_j g_t(Y_j)) via the rank form; the limit constant
      // cancels against the score-process centering term by construction.
      for (std::size_t j = 0; j < n; ++j) {
        if (col[j] > z) {
          scratch[j] = 0.0;
        } else {
          const double rank_u = static_cast<double>(an.rank[j]) / n;
          scratch[j] = (ls.c.eval(rank_u) - ls.c.eval(an.cdf[j])) * ls.q0.eval(col[j]);
        }
      }
      const double lead = pairwise_sum(scratch) / sqrt_n;
      out.remainder[i] = lead - beta_exp;
    }
  }
  return out;
}

ProcessEvaluation residual_process(const PathSample& sample,
                                   const WeightSpec& weights) {
  EvalOptions opt;
  opt.rank_sum_guard = false;
  return evaluate_replication(sample, weights, opt).eval;
}

std::vector<double> simple_residual_process(const PathSample& sample) {
  return residual_process(sample, WeightSpec::constant(1.0)).beta_star;
}

std::vector<double> simple_residual_closed_form(const PathSample& sample) {
  const std::size_t n = sample.n;
  const std::size_t m = sample.grid.size();
  std::vector<double> out(m);
  std::vector<double> cdf(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cdf[j] = sample.model.marginal_cdf(sample.grid[i], sample.at(j, i));
    }
    out[i] = 0.5 * static_cast<double>(n + 1) - pairwise_sum(cdf);
  }
  return out;
}

std::vector<double> score_process(const PathSample& sample,
                                  const WeightSpec& weights,
                                  std::span<const double> eta) {
  EvalOptions opt;
  opt.want_alpha = true;
  opt.eta = eta;
  opt.rank_sum_guard = false;
  return *evaluate_replication(sample, weights, opt).eval.alpha;
}

std::vector<double> combined_process(const PathSample& sample,
                                     const WeightSpec& weights,
                                     std::span<const double> eta) {
  EvalOptions opt;
  opt.want_gamma = true;
  opt.eta = eta;
  opt.rank_sum_guard = false;
  return *evaluate_replication(sample, weights, opt).eval.gamma;
}

LStatValues l_statistic(const PathSample& sample, const WeightSpec& weights) {
  EvalOptions opt;
  opt.want_lstat = true;
  opt.rank_sum_guard = false;
  auto full = evaluate_replication(sample, weights, opt);
  LStatValues out;
  out.j_n = std::move(*full.eval.lstat);
  out.q_n.reserve(full.eval.q_count->size());
  for (double q : *full.eval.q_count) out.q_n.push_back(static_cast<std::size_t>(q));
  return out;
}

std::vector<double> l_statistic_rank_form(const PathSample& sample,
                                          const WeightSpec& weights) {
  const LStatSpec& ls = weights.lstat_or_throw();
  const std::size_t n = sample.n;
  const std::size_t m = sample.grid.size();
  std::vector<double> out(m);
  std::vector<double> scratch(n);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = sample.grid[i];
    const auto col = column_buffer(sample, i);
    const ColumnAnalysis an = analyze_column(col, sample.model, t, i);
    const double z = ls.z.eval(t);
    for (std::size_t j = 0; j < n; ++j) {
      scratch[j] = (col[j] <= z)
                       ? ls.c.eval(static_cast<double>(an.rank[j]) / n) * ls.q0.eval(col[j])
                       : 0.0;
    }
    out[i] = pairwise_sum(scratch) / n;
  }
  return out;
}

std::vector<double> expansion_remainder(const PathSample& sample,
                                        const WeightSpec& weights) {
  EvalOptions opt;
  opt.want_remainder = true;
  opt.rank_sum_guard = false;
  return evaluate_replication(sample, weights, opt).remainder;
}

std::pair<ProcessEvaluation, ProcessEvaluation> paired_residual_process(
    const PathSample& sample, const WeightSpec& w1, const WeightSpec& w2) {
  EvalOptions opt;
  opt.weights2 = &w2;
  opt.rank_sum_guard = false;
  auto full = evaluate_replication(sample, w1, opt);
  ProcessEvaluation second;
  second.beta = std::move(*full.beta2);
  second.beta_star.resize(second.beta.size());
  const double sqrt_n = std::sqrt(static_cast<double>(sample.n));
  for (std::size_t i = 0; i < second.beta.size(); ++i) {
    second.beta_star[i] = second.beta[i] * sqrt_n;
  }
  return {std::move(full.eval), std::move(second)};
}

}  // namespace emproc
