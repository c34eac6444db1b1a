#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "genm/genm.hpp"
#include "oracles.hpp"

namespace fixtures {

inline genm::Dataset toy() {
  Eigen::MatrixXd s(3, 2);
  s << 0.35, 0.2,
       0.4, 0.1,
       0.25, 0.7;
  return genm::Dataset({genm::ScorePanel("q1", {"d1", "d2", "d3"}, s)}, {{"q1", {"d2", "d3"}}}, {"r1", "r2"});
}

inline std::string id(char prefix, std::size_t i) {
  auto s = std::to_string(i);
  return std::string(1, prefix) + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

/// Uniform scores in [0,1), at least one relevant document per query.
inline genm::Dataset random_dataset(std::mt19937_64& rng, std::size_t queries, std::size_t max_docs,
                                    std::size_t rankers, std::size_t min_docs = 2) {
  std::vector<genm::ScorePanel> panels;
  std::vector<genm::RelevanceSet> rels;
  std::uniform_int_distribution<std::size_t> n_docs(min_docs, max_docs);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t q = 0; q < queries; ++q) {
    const std::size_t n = n_docs(rng);
    std::vector<std::string> docs;
    Eigen::MatrixXd s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rankers));
    for (std::size_t d = 0; d < n; ++d) {
      docs.push_back(id('d', d));
      for (std::size_t k = 0; k < rankers; ++k) s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) = u(rng);
    }
    std::uniform_int_distribution<std::size_t> n_rel(1, std::max<std::size_t>(1, n / 2));
    const std::size_t r = n_rel(rng);
    genm::RelevanceSet rel{id('q', q), {}};
    std::vector<std::size_t> order(n);
    for (std::size_t d = 0; d < n; ++d) order[d] = d;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < r; ++i) rel.relevant_docs.insert(docs[order[i]]);
    panels.emplace_back(rel.query_id, docs, s);
    rels.push_back(rel);
  }
  std::vector<std::string> tags;
  for (std::size_t k = 0; k < rankers; ++k) tags.push_back("r" + std::to_string(k + 1));
  return genm::Dataset(std::move(panels), std::move(rels), std::move(tags));
}

inline genm::Weights random_weights(std::mt19937_64& rng, std::size_t k, double lo = 0.1, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  genm::Weights w(static_cast<Eigen::Index>(k));
  for (auto& x : w) x = u(rng);
  return w;
}

inline oracle::Panel to_oracle(const genm::Dataset& data, std::size_t q) {
  const auto& p = data.panel(q);
  oracle::Panel out;
  out.docs = p.doc_ids();
  for (Eigen::Index d = 0; d < p.scores().rows(); ++d) {
    std::vector<long double> row;
    for (Eigen::Index k = 0; k < p.scores().cols(); ++k) row.push_back(p.scores()(d, k));
    out.scores.push_back(row);
  }
  out.relevant = data.relevance(q).relevant_docs;
  return out;
}

/// Ensemble scores in double (same arithmetic as the library) handed to the
/// long-double oracle, so the two agree on order even at near ties.
inline std::vector<long double> ensemble(const genm::Dataset& data, std::size_t q, const genm::Weights& w) {
  const auto h = genm::ensemble_scores(data.panel(q), w);
  return std::vector<long double>(h.begin(), h.end());
}

inline long double oracle_map(const genm::Dataset& data, const genm::Weights& w) {
  long double total = 0;
  for (std::size_t q = 0; q < data.num_queries(); ++q) {
    total += oracle::average_precision(ensemble(data, q, w), to_oracle(data, q));
  }
  return total / static_cast<long double>(data.num_queries());
}

inline long double oracle_surrogate(const genm::Dataset& data, const genm::Weights& w, double beta) {
  long double total = 0;
  for (std::size_t q = 0; q < data.num_queries(); ++q) {
    total += oracle::surrogate_ap(ensemble(data, q, w), to_oracle(data, q), beta);
  }
  return total / static_cast<long double>(data.num_queries());
}

/// Documents come in pairs around centres `spacing` apart, jittered by 0.001. Under
/// weights in [0.2,1] each weighted difference is either within a pair
/// (inside the cutoff window) or far outside it at the default spacing.
inline genm::Dataset well_separated(std::mt19937_64& rng, std::size_t queries, std::size_t docs, std::size_t rankers,
                                    double spacing = 0.5) {
  std::uniform_real_distribution<double> jitter(-0.001, 0.001);
  std::vector<genm::ScorePanel> panels;
  std::vector<genm::RelevanceSet> rels;
  for (std::size_t q = 0; q < queries; ++q) {
    std::vector<std::string> ids;
    Eigen::MatrixXd s(static_cast<Eigen::Index>(docs), static_cast<Eigen::Index>(rankers));
    for (std::size_t d = 0; d < docs; ++d) {
      ids.push_back(id('d', d));
      const double centre = spacing * static_cast<double>(d / 2);
      for (std::size_t k = 0; k < rankers; ++k) {
        s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) = centre + jitter(rng);
      }
    }
    genm::RelevanceSet rel{id('q', q), {ids[0], ids[3]}};
    panels.emplace_back(rel.query_id, ids, s);
    rels.push_back(rel);
  }
  std::vector<std::string> tags;
  for (std::size_t k = 0; k < rankers; ++k) tags.push_back("r" + std::to_string(k + 1));
  return genm::Dataset(std::move(panels), std::move(rels), std::move(tags));
}

/// Minimum |weighted score difference| over (relevant, other) pairs.
inline double delta_min(const genm::Dataset& data, const genm::Weights& w) {
  return genm::bound_report(data, w, genm::SurrogateConfig{}).delta_min;
}

}  // namespace fixtures
