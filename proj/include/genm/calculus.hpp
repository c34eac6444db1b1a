#pragma once

// Analytic gradient and Hessian of the MAP surrogate, with the optional
// window cutoff that zeroes sigmoid derivatives far from the midpoint.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "genm/core_model.hpp"
#include "genm/detail/compensated_sum.hpp"
#include "genm/surrogate.hpp"

namespace genm {

/// Per (query, relevant document) sums over the other documents of the
/// sigmoid terms and their first and second weight derivatives.
struct PairAccumulator {
  std::size_t query = 0;
  std::size_t relevant_row = 0;
  std::size_t position = 0;  ///< 1-based j among the query's relevant documents
  double g_sum = 0.0;
  Eigen::VectorXd dg_sum;
  Eigen::MatrixXd d2g_sum;
};

struct GradHess {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  std::vector<PairAccumulator> accumulators;
};

struct DerivativeOptions {
  /// Pairs whose weighted score difference lies outside (-window, window)
  /// contribute to the position sum only. Infinity disables the cutoff.
  double window = std::numeric_limits<double>::infinity();
  /// Accumulate beta * s_k for the first derivative without the g(1-g) factor,
  /// exactly as the abbreviated listing does. Diagnostic only.
  bool literal_listing = false;
  bool with_hessian = true;
  bool keep_accumulators = false;
};

/// d g / d w_k for one sigmoid term with score-difference vector `s_diffs`.
inline Eigen::VectorXd grad_g(const Eigen::VectorXd& s_diffs, const Weights& w, const SurrogateConfig& cfg) {
  if (s_diffs.size() != w.size()) throw invalid_argument("score difference and weight sizes differ");
  const double z = w.dot(s_diffs);
  const double g = sigmoid_indicator(z, cfg.beta);
  const double one_minus_g = sigmoid_indicator(-z, cfg.beta);
  return (-cfg.beta * g * one_minus_g) * s_diffs;
}

namespace detail {

inline void accumulate_query(const Dataset& data, std::size_t query, const Weights& w, double beta,
                             const DerivativeOptions& opt, Eigen::VectorXd& grad, Eigen::MatrixXd& hess,
                             std::vector<PairAccumulator>* keep) {
  const auto& panel = data.panel(query);
  const auto& x = panel.scores();
  const auto K = static_cast<Eigen::Index>(data.num_rankers());
  auto rows = data.relevant_rows(query);
  if (rows.empty()) throw invalid_argument("query " + panel.query_id() + " has no relevant documents");
  const auto scores = ensemble_scores(panel, w);
  sort_rows_by_score(rows, scores, panel.doc_ids());

  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<compensated_sum> dg(static_cast<std::size_t>(K));
  std::vector<compensated_sum> d2g(static_cast<std::size_t>(K * K));
  Eigen::VectorXd s(K);

  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(rows[j]);
    compensated_sum g_sum;
    std::fill(dg.begin(), dg.end(), compensated_sum{});
    std::fill(d2g.begin(), d2g.end(), compensated_sum{});

    for (Eigen::Index d = 0; d < x.rows(); ++d) {
      if (d == r) continue;
      const double z = scores[r] - scores[d];
      const double g = sigmoid_indicator(z, beta);
      g_sum += g;
      if (!(-opt.window < z && z < opt.window)) continue;
      const double one_minus_g = sigmoid_indicator(-z, beta);
      const double slope = g * one_minus_g;
      for (Eigen::Index k = 0; k < K; ++k) s[k] = x(r, k) - x(d, k);
      for (Eigen::Index k = 0; k < K; ++k) {
        dg[static_cast<std::size_t>(k)] += opt.literal_listing ? beta * s[k] : -beta * s[k] * slope;
      }
      if (!opt.with_hessian) continue;
      const double curv = beta * beta * slope * (one_minus_g - g);
      for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k; l < K; ++l) {
          d2g[static_cast<std::size_t>(k * K + l)] += curv * s[k] * s[l];
        }
      }
    }

    const double pos = static_cast<double>(j + 1);
    const double denom = 1.0 + g_sum.value();
    const double denom2 = denom * denom;
    for (Eigen::Index k = 0; k < K; ++k) {
      grad[k] += scale * (-pos * dg[static_cast<std::size_t>(k)].value() / denom2);
    }
    if (opt.with_hessian) {
      for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = k; l < K; ++l) {
          const double gk = dg[static_cast<std::size_t>(k)].value();
          const double gl = dg[static_cast<std::size_t>(l)].value();
          const double gkl = d2g[static_cast<std::size_t>(k * K + l)].value();
          hess(k, l) += scale * (-pos * gkl / denom2 + 2.0 * pos * gk * gl / (denom2 * denom));
        }
      }
    }
    if (keep != nullptr) {
      PairAccumulator acc;
      acc.query = query;
      acc.relevant_row = rows[j];
      acc.position = j + 1;
      acc.g_sum = g_sum.value();
      acc.dg_sum.resize(K);
      acc.d2g_sum = Eigen::MatrixXd::Zero(K, K);
      for (Eigen::Index k = 0; k < K; ++k) {
        acc.dg_sum[k] = dg[static_cast<std::size_t>(k)].value();
        for (Eigen::Index l = k; l < K; ++l) {
          acc.d2g_sum(k, l) = acc.d2g_sum(l, k) = d2g[static_cast<std::size_t>(k * K + l)].value();
        }
      }
      keep->push_back(std::move(acc));
    }
  }
}

inline void mirror_upper(Eigen::MatrixXd& m) {
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    for (Eigen::Index l = 0; l < k; ++l) m(k, l) = m(l, k);
  }
}

}  // namespace detail

/// Gradient (and optionally Hessian) of the surrogate over the queries in `queries`,
/// each query term scaled by 1/|queries|.
inline GradHess derivatives(const Dataset& data, const std::vector<std::size_t>& queries, const Weights& w,
                            const SurrogateConfig& cfg, const DerivativeOptions& opt) {
  cfg.validate();
  const auto K = static_cast<Eigen::Index>(data.num_rankers());
  if (w.size() != K) throw invalid_argument("weight vector size does not match ranker count");
  if (queries.empty()) throw invalid_argument("no queries to differentiate over");
  GradHess out;
  out.gradient = Eigen::VectorXd::Zero(K);
  out.hessian = Eigen::MatrixXd::Zero(opt.with_hessian ? K : 0, opt.with_hessian ? K : 0);
  for (auto q : queries) {
    Eigen::VectorXd qg = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd qh = Eigen::MatrixXd::Zero(out.hessian.rows(), out.hessian.cols());
    detail::accumulate_query(data, q, w, cfg.beta, opt, qg, qh, opt.keep_accumulators ? &out.accumulators : nullptr);
    out.gradient += qg;
    out.hessian += qh;
  }
  const double inv_l = 1.0 / static_cast<double>(queries.size());
  out.gradient *= inv_l;
  if (opt.with_hessian) {
    out.hessian *= inv_l;
    detail::mirror_upper(out.hessian);
  }
  return out;
}

inline std::vector<std::size_t> all_queries(const Dataset& data) {
  std::vector<std::size_t> q(data.num_queries());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = i;
  return q;
}

/// Exact analytic gradient of the surrogate objective.
inline Eigen::VectorXd gradient_full(const Dataset& data, const Weights& w, const SurrogateConfig& cfg) {
  DerivativeOptions opt;
  opt.with_hessian = false;
  return derivatives(data, all_queries(data), w, cfg, opt).gradient;
}

/// Exact analytic Hessian of the surrogate objective.
inline Eigen::MatrixXd hessian_full(const Dataset& data, const Weights& w, const SurrogateConfig& cfg) {
  return derivatives(data, all_queries(data), w, cfg, DerivativeOptions{}).hessian;
}

/// Gradient and Hessian with derivative contributions kept only for pairs whose
/// weighted score difference lies strictly inside (-window, window).
inline GradHess grad_hessian_cutoff(const Dataset& data, const Weights& w, const SurrogateConfig& cfg,
                                    double window, bool literal_listing = false, bool keep_accumulators = false) {
  DerivativeOptions opt;
  opt.window = window;
  opt.literal_listing = literal_listing;
  opt.keep_accumulators = keep_accumulators;
  return derivatives(data, all_queries(data), w, cfg, opt);
}

/// Same, with the default window 2 / beta.
inline GradHess grad_hessian_cutoff(const Dataset& data, const Weights& w, const SurrogateConfig& cfg) {
  return grad_hessian_cutoff(data, w, cfg, 2.0 / cfg.beta);
}

}  // namespace genm
