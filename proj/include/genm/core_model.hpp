#pragma once

// Exact (non-smoothed) ensemble scoring, positions and mean average precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genm/errors.hpp"

namespace genm {

/// One weight per constituent ranker, indexed like the score panel columns.
using Weights = Eigen::VectorXd;

/// Raw ranking scores of one query: rows are documents, columns are rankers.
class ScorePanel {
 public:
  ScorePanel() = default;

  ScorePanel(std::string query_id, std::vector<std::string> doc_ids, Eigen::MatrixXd scores)
      : query_id_(std::move(query_id)), doc_ids_(std::move(doc_ids)), scores_(std::move(scores)) {
    if (static_cast<std::size_t>(scores_.rows()) != doc_ids_.size()) {
      throw invalid_argument("panel " + query_id_ + ": " + std::to_string(scores_.rows()) +
                             " score rows for " + std::to_string(doc_ids_.size()) + " documents");
    }
    if (!scores_.allFinite()) {
      throw invalid_argument("panel " + query_id_ + ": non-finite score");
    }
    index_.reserve(doc_ids_.size());
    for (std::size_t r = 0; r < doc_ids_.size(); ++r) {
      if (!index_.emplace(doc_ids_[r], r).second) {
        throw invalid_argument("panel " + query_id_ + ": duplicate document " + doc_ids_[r]);
      }
    }
  }

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const Eigen::MatrixXd& scores() const noexcept { return scores_; }
  std::size_t num_docs() const noexcept { return doc_ids_.size(); }
  std::size_t num_rankers() const noexcept { return static_cast<std::size_t>(scores_.cols()); }

  std::optional<std::size_t> find(std::string_view doc) const {
    auto it = index_.find(std::string(doc));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view doc) const {
    if (auto r = find(doc)) return *r;
    throw not_found("document " + std::string(doc) + " not in panel " + query_id_);
  }

 private:
  std::string query_id_;
  std::vector<std::string> doc_ids_;
  Eigen::MatrixXd scores_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct RelevanceSet {
  std::string query_id;
  std::set<std::string> relevant_docs;
};

/// Queries with their score panels and relevance judgements, aligned by index.
///
/// Relevance sets may be empty (unsupervised use); training and evaluation
/// entry points reject empty sets themselves.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<ScorePanel> panels, std::vector<RelevanceSet> relevance,
          std::vector<std::string> ranker_tags)
      : panels_(std::move(panels)), relevance_(std::move(relevance)), ranker_tags_(std::move(ranker_tags)) {
    if (panels_.empty()) throw invalid_argument("dataset needs at least one query");
    if (panels_.size() != relevance_.size()) {
      throw invalid_argument("dataset: " + std::to_string(panels_.size()) + " panels but " +
                             std::to_string(relevance_.size()) + " relevance sets");
    }
    relevant_rows_.resize(panels_.size());
    for (std::size_t i = 0; i < panels_.size(); ++i) {
      const auto& p = panels_[i];
      if (p.num_rankers() != ranker_tags_.size()) {
        throw invalid_argument("panel " + p.query_id() + " has " + std::to_string(p.num_rankers()) +
                               " columns, dataset has " + std::to_string(ranker_tags_.size()) + " rankers");
      }
      if (relevance_[i].query_id != p.query_id()) {
        throw invalid_argument("relevance set " + relevance_[i].query_id + " misaligned with panel " +
                               p.query_id());
      }
      for (const auto& d : relevance_[i].relevant_docs) {
        relevant_rows_[i].push_back(p.index_of(d));
      }
    }
  }

  std::size_t num_queries() const noexcept { return panels_.size(); }
  std::size_t num_rankers() const noexcept { return ranker_tags_.size(); }
  const std::vector<ScorePanel>& panels() const noexcept { return panels_; }
  const std::vector<RelevanceSet>& relevance() const noexcept { return relevance_; }
  const std::vector<std::string>& ranker_tags() const noexcept { return ranker_tags_; }
  const ScorePanel& panel(std::size_t i) const { return panels_.at(i); }
  const RelevanceSet& relevance(std::size_t i) const { return relevance_.at(i); }

  /// Panel rows of the relevant documents of query `i`, in ascending doc-id order.
  const std::vector<std::size_t>& relevant_rows(std::size_t i) const { return relevant_rows_.at(i); }

  /// Sub-dataset made of the given query indices, in that order.
  Dataset subset(const std::vector<std::size_t>& queries) const {
    std::vector<ScorePanel> p;
    std::vector<RelevanceSet> r;
    for (auto q : queries) {
      p.push_back(panels_.at(q));
      r.push_back(relevance_.at(q));
    }
    return Dataset(std::move(p), std::move(r), ranker_tags_);
  }

  void require_relevance() const {
    for (const auto& r : relevance_) {
      if (r.relevant_docs.empty()) throw invalid_argument("query " + r.query_id + " has no relevant documents");
    }
  }

 private:
  std::vector<ScorePanel> panels_;
  std::vector<RelevanceSet> relevance_;
  std::vector<std::string> ranker_tags_;
  std::vector<std::vector<std::size_t>> relevant_rows_;
};

namespace detail {

inline void check_dims(const ScorePanel& panel, const Weights& w) {
  if (static_cast<std::size_t>(w.size()) != panel.num_rankers()) {
    throw invalid_argument("weight vector has " + std::to_string(w.size()) + " entries, panel has " +
                           std::to_string(panel.num_rankers()) + " rankers");
  }
}

// 1 + number of documents scoring strictly higher than row `r`.
inline std::size_t rank_of_row(const Eigen::VectorXd& scores, std::size_t r) {
  std::size_t above = 0;
  const double s = scores[static_cast<Eigen::Index>(r)];
  for (Eigen::Index d = 0; d < scores.size(); ++d) {
    if (scores[d] > s) ++above;
  }
  return 1 + above;
}

// Descending score, ties by ascending document id.
inline void sort_rows_by_score(std::vector<std::size_t>& rows, const Eigen::VectorXd& scores,
                               const std::vector<std::string>& doc_ids) {
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return doc_ids[a] < doc_ids[b];
  });
}

inline double average_precision_rows(const Eigen::VectorXd& scores, const ScorePanel& panel,
                                      std::vector<std::size_t> rows) {
  if (rows.empty()) throw invalid_argument("query " + panel.query_id() + " has no relevant documents");
  sort_rows_by_score(rows, scores, panel.doc_ids());
  double total = 0.0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    total += static_cast<double>(j + 1) / static_cast<double>(rank_of_row(scores, rows[j]));
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace detail

/// Weighted sum of the constituent scores, one entry per document in panel order.
inline Eigen::VectorXd ensemble_scores(const ScorePanel& panel, const Weights& w) {
  detail::check_dims(panel, w);
  const auto& x = panel.scores();
  Eigen::VectorXd out(x.rows());
  // Explicit loop: every row is summed in the same ranker order, so a
  // document's score never depends on how many other documents share the panel.
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) s += w[k] * x(r, k);
    out[r] = s;
  }
  return out;
}

/// Position of `doc`: one plus the number of documents with a strictly greater
/// ensemble score. Tied documents share a position.
inline std::size_t exact_rank(const ScorePanel& panel, const Weights& w, std::string_view doc) {
  const auto row = panel.index_of(doc);
  return detail::rank_of_row(ensemble_scores(panel, w), row);
}

/// Relevant documents by descending ensemble score, ties by ascending id.
inline std::vector<std::string> sorted_relevant(const ScorePanel& panel, const Weights& w,
                                                const RelevanceSet& rel) {
  std::vector<std::size_t> rows;
  for (const auto& d : rel.relevant_docs) rows.push_back(panel.index_of(d));
  detail::sort_rows_by_score(rows, ensemble_scores(panel, w), panel.doc_ids());
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(panel.doc_ids()[r]);
  return out;
}

/// (1/|rel|) * sum_j j / rank(d_j) with d_j the j-th relevant document.
///
/// Bounded by 1 unless two relevant documents share an ensemble score, in
/// which case strict-inequality positions undercount.
inline double average_precision_exact(const ScorePanel& panel, const Weights& w, const RelevanceSet& rel) {
  if (rel.relevant_docs.empty()) {
    throw invalid_argument("query " + rel.query_id + " has no relevant documents");
  }
  std::vector<std::size_t> rows;
  for (const auto& d : rel.relevant_docs) rows.push_back(panel.index_of(d));
  return detail::average_precision_rows(ensemble_scores(panel, w), panel, std::move(rows));
}

inline double average_precision_exact(const Dataset& data, std::size_t query, const Weights& w) {
  const auto& panel = data.panel(query);
  return detail::average_precision_rows(ensemble_scores(panel, w), panel, data.relevant_rows(query));
}

inline std::vector<double> per_query_ap(const Dataset& data, const Weights& w) {
  std::vector<double> out(data.num_queries());
  for (std::size_t i = 0; i < data.num_queries(); ++i) out[i] = average_precision_exact(data, i, w);
  return out;
}

inline double map_exact(const Dataset& data, const Weights& w) {
  if (data.num_queries() == 0) throw invalid_argument("empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.num_queries(); ++i) total += average_precision_exact(data, i, w);
  return total / static_cast<double>(data.num_queries());
}

/// True when some query has two relevant documents with equal ensemble score.
inline bool has_relevant_ties(const Dataset& data, const Weights& w) {
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    const auto scores = ensemble_scores(data.panel(i), w);
    std::vector<double> rel;
    for (auto r : data.relevant_rows(i)) rel.push_back(scores[static_cast<Eigen::Index>(r)]);
    std::sort(rel.begin(), rel.end());
    if (std::adjacent_find(rel.begin(), rel.end()) != rel.end()) return true;
  }
  return false;
}

}  // namespace genm
