#pragma once

// Sigmoid-smoothed positions and the differentiable MAP surrogate.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "genm/core_model.hpp"
#include "genm/detail/compensated_sum.hpp"
#include "genm/errors.hpp"

namespace genm {

struct SurrogateConfig {
  double beta = 200.0;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw invalid_argument("beta must be positive and finite");
  }
};

/// Smooth stand-in for I{s_diff < 0}: 1 / (1 + exp(beta * s_diff)).
///
/// Evaluated on whichever branch keeps the exponent non-positive, so it
/// saturates to 0 or 1 instead of overflowing.
inline double sigmoid_indicator(double s_diff, double beta) noexcept {
  const double z = beta * s_diff;
  if (z <= 0.0) return 1.0 / (1.0 + std::exp(z));
  const double e = std::exp(-z);
  return e / (1.0 + e);
}

inline double sigmoid_indicator(double s_diff, const SurrogateConfig& cfg) noexcept {
  return sigmoid_indicator(s_diff, cfg.beta);
}

namespace detail {

inline double smoothed_rank_of_row(const Eigen::VectorXd& scores, std::size_t row, double beta) {
  compensated_sum sum;
  const double s = scores[static_cast<Eigen::Index>(row)];
  for (Eigen::Index d = 0; d < scores.size(); ++d) {
    if (static_cast<std::size_t>(d) == row) continue;
    sum += sigmoid_indicator(s - scores[d], beta);
  }
  return 1.0 + sum.value();
}

}  // namespace detail

/// 1 + sum over other documents of the sigmoid indicator.
inline double approx_rank(const ScorePanel& panel, const Weights& w, std::string_view doc,
                          const SurrogateConfig& cfg) {
  cfg.validate();
  const auto row = panel.index_of(doc);
  return detail::smoothed_rank_of_row(ensemble_scores(panel, w), row, cfg.beta);
}

/// Single-query surrogate average precision, relevant documents ordered under `w`.
inline double query_surrogate(const Dataset& data, std::size_t query, const Weights& w,
                              const SurrogateConfig& cfg) {
  const auto& panel = data.panel(query);
  auto rows = data.relevant_rows(query);
  if (rows.empty()) throw invalid_argument("query " + panel.query_id() + " has no relevant documents");
  const auto scores = ensemble_scores(panel, w);
  detail::sort_rows_by_score(rows, scores, panel.doc_ids());
  double total = 0.0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    total += static_cast<double>(j + 1) / detail::smoothed_rank_of_row(scores, rows[j], cfg.beta);
  }
  return total / static_cast<double>(rows.size());
}

/// Mean over queries of the surrogate average precision.
inline double surrogate_objective(const Dataset& data, const Weights& w, const SurrogateConfig& cfg) {
  cfg.validate();
  if (data.num_queries() == 0) throw invalid_argument("empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.num_queries(); ++i) total += query_surrogate(data, i, w, cfg);
  return total / static_cast<double>(data.num_queries());
}

struct BoundReport {
  double indicator_bound = 0.0;  ///< per sigmoid term
  double position_bound = 0.0;   ///< per smoothed position
  double objective_bound = 0.0;  ///< |surrogate - exact MAP|
  double delta_min = 0.0;        ///< smallest |weighted score difference| over summed pairs
  bool ties = false;             ///< delta_min == 0; bounds then use the 1/2 gap at a tie
};

/// The three bounds evaluated at a given gap, with |D| the largest panel size.
inline BoundReport bounds_for(double delta, double beta, std::size_t docs, std::size_t queries,
                              std::size_t total_relevant) {
  BoundReport rep;
  rep.delta_min = delta;
  rep.ties = delta == 0.0;
  // 1/(1+exp(beta*delta)) is the sigmoid at +delta.
  rep.indicator_bound = sigmoid_indicator(delta, beta);
  const double others = docs > 0 ? static_cast<double>(docs - 1) : 0.0;
  rep.position_bound = others * rep.indicator_bound;
  const double L = static_cast<double>(queries);
  rep.objective_bound = rep.position_bound * (L + static_cast<double>(total_relevant)) / (2.0 * L);
  return rep;
}

inline BoundReport bound_report(const Dataset& data, const Weights& w, const SurrogateConfig& cfg) {
  cfg.validate();
  double delta = std::numeric_limits<double>::infinity();
  std::size_t max_docs = 0;
  std::size_t total_relevant = 0;
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    const auto scores = ensemble_scores(data.panel(i), w);
    max_docs = std::max<std::size_t>(max_docs, static_cast<std::size_t>(scores.size()));
    total_relevant += data.relevant_rows(i).size();
    for (auto r : data.relevant_rows(i)) {
      for (Eigen::Index d = 0; d < scores.size(); ++d) {
        if (static_cast<std::size_t>(d) == r) continue;
        delta = std::min(delta, std::fabs(scores[static_cast<Eigen::Index>(r)] - scores[d]));
      }
    }
  }
  // Single-document panels sum no pairs: the surrogate is then exact.
  if (!std::isfinite(delta)) {
    BoundReport rep;
    rep.delta_min = delta;
    return rep;
  }
  return bounds_for(delta, cfg.beta, max_docs, data.num_queries(), total_relevant);
}

}  // namespace genm
