#pragma once

// Retrieval metrics and the experiment protocol: precision at k, 11-point
// interpolated precision-recall, two-fold cross validation and the Wilcoxon
// signed-rank test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "genm/core_model.hpp"
#include "genm/detail/rng.hpp"
#include "genm/errors.hpp"

namespace genm {

using PrCurve = std::array<double, 11>;

struct EvalReport {
  std::optional<double> map;
  std::map<std::size_t, double> pr_at;
  std::optional<PrCurve> pr_curve;
  std::map<std::string, double> per_query_ap;
};

struct CvReport {
  std::array<double, 2> fold_maps{};
  double mean_map = 0.0;
  std::array<Weights, 2> fold_weights;
  std::uint64_t split_seed = 0;
  std::array<std::vector<std::string>, 2> fold_queries;  ///< test queries of each fold
};

struct SignificanceReport {
  double statistic = 0.0;  ///< W+ - W-; changes sign when the inputs are swapped
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  bool exact = true;
  bool insufficient_data = false;
  bool significant_95 = false;
};

namespace detail {

inline std::vector<std::size_t> ranked_rows(const ScorePanel& panel, const Weights& w) {
  const auto scores = ensemble_scores(panel, w);
  std::vector<std::size_t> rows(panel.num_docs());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  sort_rows_by_score(rows, scores, panel.doc_ids());
  return rows;
}

inline std::set<std::size_t> relevant_row_set(const ScorePanel& panel, const RelevanceSet& rel) {
  std::set<std::size_t> out;
  for (const auto& d : rel.relevant_docs) out.insert(panel.index_of(d));
  return out;
}

}  // namespace detail

/// Relevant documents among the top k of the ensemble ranking, divided by k.
/// Positions past the end of the panel count as nonrelevant.
inline double precision_at_k(const ScorePanel& panel, const Weights& w, const RelevanceSet& rel, std::size_t k) {
  if (k < 1) throw invalid_argument("k must be >= 1");
  const auto rows = detail::ranked_rows(panel, w);
  const auto relevant = detail::relevant_row_set(panel, rel);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, rows.size()); ++i) hits += relevant.count(rows[i]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

/// Interpolated precision (max precision at recall >= level) at recall
/// 0.0, 0.1, ..., 1.0.
inline PrCurve pr_curve_11pt(const ScorePanel& panel, const Weights& w, const RelevanceSet& rel) {
  if (rel.relevant_docs.empty()) throw invalid_argument("query " + rel.query_id + " has no relevant documents");
  const auto rows = detail::ranked_rows(panel, w);
  const auto relevant = detail::relevant_row_set(panel, rel);
  const double total = static_cast<double>(relevant.size());
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  std::size_t found = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (relevant.count(rows[i]) == 0) continue;
    ++found;
    points.emplace_back(static_cast<double>(found) / total, static_cast<double>(found) / static_cast<double>(i + 1));
  }
  PrCurve curve{};
  double best = 0.0;
  std::size_t p = points.size();
  for (int level = 10; level >= 0; --level) {
    const double r = level / 10.0;
    // Recall levels are compared with a small slack so that 3/10 counts as 0.3.
    while (p > 0 && points[p - 1].first >= r - 1e-12) {
      best = std::max(best, points[p - 1].second);
      --p;
    }
    curve[static_cast<std::size_t>(level)] = best;
  }
  return curve;
}

inline PrCurve mean_pr_curve(const Dataset& data, const Weights& w) {
  PrCurve mean{};
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    const auto c = pr_curve_11pt(data.panel(i), w, data.relevance(i));
    for (std::size_t l = 0; l < mean.size(); ++l) mean[l] += c[l];
  }
  for (auto& v : mean) v /= static_cast<double>(data.num_queries());
  return mean;
}

struct MetricSelection {
  bool map = true;
  std::vector<std::size_t> precision_at{1, 5};
  bool pr11 = true;
};

inline EvalReport evaluate(const Dataset& data, const Weights& w, const MetricSelection& metrics = {}) {
  data.require_relevance();
  EvalReport rep;
  if (metrics.map) {
    const auto aps = per_query_ap(data, w);
    double total = 0.0;
    for (std::size_t i = 0; i < aps.size(); ++i) {
      rep.per_query_ap[data.panel(i).query_id()] = aps[i];
      total += aps[i];
    }
    rep.map = total / static_cast<double>(aps.size());
  }
  for (auto k : metrics.precision_at) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.num_queries(); ++i) total += precision_at_k(data.panel(i), w, data.relevance(i), k);
    rep.pr_at[k] = total / static_cast<double>(data.num_queries());
  }
  if (metrics.pr11) rep.pr_curve = mean_pr_curve(data, w);
  return rep;
}

/// Trains weights on a dataset.
using Trainer = std::function<Weights(const Dataset&)>;

/// Query-level two-fold split: queries are sorted by id, shuffled with the
/// seed, the first ceil(L/2) form fold 0 and the rest fold 1. Each fold is
/// evaluated (exact MAP) with weights trained on the other.
inline CvReport two_fold_cv(const Dataset& data, const Trainer& trainer, std::uint64_t split_seed) {
  const std::size_t L = data.num_queries();
  if (L < 2) throw invalid_argument("two-fold cross validation needs at least 2 queries");
  std::vector<std::size_t> order(L);
  for (std::size_t i = 0; i < L; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.panel(a).query_id() < data.panel(b).query_id(); });
  std::mt19937_64 rng(split_seed);
  detail::shuffle(order, rng);

  const std::size_t half = (L + 1) / 2;
  std::array<std::vector<std::size_t>, 2> folds{
      std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half)),
      std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(half), order.end())};

  CvReport rep;
  rep.split_seed = split_seed;
  for (int f = 0; f < 2; ++f) {
    const auto train = data.subset(folds[1 - f]);
    const auto test = data.subset(folds[f]);
    rep.fold_weights[f] = trainer(train);
    rep.fold_maps[f] = map_exact(test, rep.fold_weights[f]);
    for (auto q : folds[f]) rep.fold_queries[f].push_back(data.panel(q).query_id());
  }
  rep.mean_map = (rep.fold_maps[0] + rep.fold_maps[1]) / 2.0;
  return rep;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Number of sign patterns per value of 2*W+, with ranks given doubled so that
// average ranks of ties stay integral.
inline std::vector<double> signed_rank_counts(const std::vector<long>& doubled_ranks) {
  long total = 0;
  for (auto r : doubled_ranks) total += r;
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (auto r : doubled_ranks) {
    for (long s = reach; s >= 0; --s) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    reach += r;
  }
  return counts;
}

}  // namespace detail

inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped; tied magnitudes get average ranks. Exact null distribution for up
/// to 25 pairs, normal approximation with tie and continuity correction above.
inline SignificanceReport wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw invalid_argument("paired samples must have equal length");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diff.push_back(d);
  }
  SignificanceReport rep;
  const std::size_t n = diff.size();
  rep.n_effective = n;
  if (n == 0) {
    rep.insufficient_data = true;
    return rep;
  }

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return std::fabs(diff[x]) < std::fabs(diff[y]); });
  std::vector<long> doubled(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(diff[idx[j + 1]]) == std::fabs(diff[idx[i]])) ++j;
    const long t = static_cast<long>(j - i + 1);
    const long doubled_avg = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t m = i; m <= j; ++m) doubled[idx[m]] = doubled_avg;
    tie_term += static_cast<double>(t * t * t - t);
    i = j + 1;
  }

  long w_plus2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += doubled[i];
    if (diff[i] > 0) w_plus2 += doubled[i];
  }
  rep.w_plus = static_cast<double>(w_plus2) / 2.0;
  rep.w_minus = static_cast<double>(total2 - w_plus2) / 2.0;
  rep.statistic = rep.w_plus - rep.w_minus;

  if (n <= kWilcoxonExactMax) {
    rep.exact = true;
    const auto counts = detail::signed_rank_counts(doubled);
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (static_cast<long>(s) <= w_plus2) lower += counts[s];
      if (static_cast<long>(s) >= w_plus2) upper += counts[s];
    }
    rep.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
  } else {
    rep.exact = false;
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::fabs(rep.w_plus - mean) - 0.5);
    rep.p_value = var > 0.0 ? std::min(1.0, 2.0 * (1.0 - detail::normal_cdf(dev / std::sqrt(var)))) : 1.0;
  }
  rep.insufficient_data = n < kWilcoxonMinPairs;
  rep.significant_95 = !rep.insufficient_data && rep.p_value < 0.05;
  return rep;
}

}  // namespace genm
