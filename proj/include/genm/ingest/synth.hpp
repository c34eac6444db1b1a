#pragma once

// Synthetic datasets with a planted weight vector.
//
// Each document gets a base score per ranker. Signal rankers mix a latent
// per-document quality shared by all of them (`shared_signal`) with an
// independent uniform draw; noise rankers are independent uniform draws. The
// relevant documents of a query are the top `relevant` documents under the
// planted combination of the base scores, and the published scores are the
// base scores plus Gaussian noise of standard deviation `noise`. With noise 0
// the planted weights therefore rank every relevant document first.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "genm/core_model.hpp"
#include "genm/detail/rng.hpp"
#include "genm/errors.hpp"
#include "genm/ingest/runs.hpp"

namespace genm {

struct SynthParams {
  std::size_t rankers = 3;
  std::size_t queries = 50;
  std::size_t docs = 100;
  std::size_t relevant = 10;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> noise_rankers;
  double shared_signal = 0.0;
  /// Regenerate (derived seeds) until the planted weights beat every single
  /// ranker on exact MAP, at most this many extra attempts.
  std::size_t max_retries = 20;
};

struct SynthResult {
  Dataset dataset;
  Weights planted;
  bool advantage_verified = false;
  std::size_t attempts = 0;
};

namespace detail {

inline std::string padded(char prefix, std::size_t i, std::size_t count) {
  const auto width = std::to_string(count).size();
  auto s = std::to_string(i);
  return std::string(1, prefix) + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

inline SynthResult synth_attempt(const SynthParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto K = static_cast<Eigen::Index>(p.rankers);
  const std::set<std::size_t> noisy(p.noise_rankers.begin(), p.noise_rankers.end());

  Weights planted(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    planted[k] = noisy.count(static_cast<std::size_t>(k)) ? 0.0 : uniform(rng, 0.2, 1.0);
  }
  planted /= planted.sum();

  std::vector<std::string> doc_ids(p.docs);
  for (std::size_t d = 0; d < p.docs; ++d) doc_ids[d] = padded('d', d + 1, p.docs);

  std::vector<ScorePanel> panels;
  std::vector<RelevanceSet> rels;
  for (std::size_t q = 0; q < p.queries; ++q) {
    const auto N = static_cast<Eigen::Index>(p.docs);
    Eigen::MatrixXd base(N, K);
    for (Eigen::Index d = 0; d < N; ++d) {
      const double latent = uniform01(rng);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double u = uniform01(rng);
        base(d, k) = noisy.count(static_cast<std::size_t>(k)) ? u : p.shared_signal * latent + (1.0 - p.shared_signal) * u;
      }
    }
    const Eigen::VectorXd planted_scores = base * planted;
    std::vector<std::size_t> order(p.docs);
    for (std::size_t d = 0; d < p.docs; ++d) order[d] = d;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return planted_scores[static_cast<Eigen::Index>(a)] > planted_scores[static_cast<Eigen::Index>(b)];
    });
    RelevanceSet rel{padded('q', q + 1, p.queries), {}};
    for (std::size_t i = 0; i < p.relevant; ++i) rel.relevant_docs.insert(doc_ids[order[i]]);

    Eigen::MatrixXd scores = base;
    if (p.noise > 0.0) {
      for (Eigen::Index d = 0; d < N; ++d) {
        for (Eigen::Index k = 0; k < K; ++k) scores(d, k) += p.noise * normal(rng);
      }
    }
    panels.emplace_back(rel.query_id, doc_ids, std::move(scores));
    rels.push_back(std::move(rel));
  }
  std::vector<std::string> tags;
  for (std::size_t k = 0; k < p.rankers; ++k) tags.push_back("r" + std::to_string(k + 1));
  return SynthResult{Dataset(std::move(panels), std::move(rels), std::move(tags)), planted, false, 1};
}

inline bool planted_beats_singles(const SynthResult& r) {
  const double planted_map = map_exact(r.dataset, r.planted);
  for (Eigen::Index k = 0; k < r.planted.size(); ++k) {
    if (!(planted_map > map_exact(r.dataset, Weights::Unit(r.planted.size(), k)))) return false;
  }
  return true;
}

}  // namespace detail

/// Deterministic in `params.seed`.
inline SynthResult synth_generate(const SynthParams& p) {
  if (p.rankers < 2) throw invalid_argument("synthetic data needs at least 2 rankers");
  if (p.queries < 1) throw invalid_argument("synthetic data needs at least 1 query");
  if (p.docs < 2) throw invalid_argument("synthetic data needs at least 2 documents per query");
  if (p.relevant < 1 || p.relevant >= p.docs) throw invalid_argument("relevant count must be in [1, docs)");
  if (p.noise < 0.0) throw invalid_argument("noise must be >= 0");
  if (p.shared_signal < 0.0 || p.shared_signal > 1.0) throw invalid_argument("shared_signal must be in [0, 1]");
  for (auto k : p.noise_rankers) {
    if (k >= p.rankers) throw invalid_argument("noise ranker index out of range");
  }
  if (p.noise_rankers.size() >= p.rankers) throw invalid_argument("need at least one signal ranker");

  for (std::size_t attempt = 0;; ++attempt) {
    // Attempt 0 uses the seed itself; retries derive new seeds from it.
    const std::uint64_t seed = p.seed + 0x9E3779B97F4A7C15ULL * attempt;
    auto r = detail::synth_attempt(p, seed);
    r.attempts = attempt + 1;
    r.advantage_verified = detail::planted_beats_singles(r);
    if (r.advantage_verified || attempt >= p.max_retries) return r;
  }
}

/// One ranked run per ranker column, every document included.
inline std::vector<RankerRun> synth_runs(const Dataset& data) {
  std::vector<RankerRun> out;
  for (std::size_t k = 0; k < data.num_rankers(); ++k) {
    RankerRun run{data.ranker_tags()[k], {}};
    for (std::size_t i = 0; i < data.num_queries(); ++i) {
      const auto& panel = data.panel(i);
      std::vector<RunRecord> recs;
      for (std::size_t r = 0; r < panel.num_docs(); ++r) {
        recs.push_back(RunRecord{panel.query_id(), panel.doc_ids()[r], 0,
                                 panel.scores()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)), run.tag});
      }
      rerank(recs);
      run.records.insert(run.records.end(), recs.begin(), recs.end());
    }
    out.push_back(std::move(run));
  }
  return out;
}

/// Relevant documents only, relevance 1.
inline std::vector<QrelRecord> synth_qrels(const Dataset& data) {
  std::vector<QrelRecord> out;
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    for (const auto& d : data.relevance(i).relevant_docs) out.push_back(QrelRecord{data.relevance(i).query_id, d, 1});
  }
  return out;
}

}  // namespace genm
