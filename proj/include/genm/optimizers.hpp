#pragma once

// Training algorithms for the ensemble weights: multi-start safeguarded Newton
// ascent on a full batch, per-query stochastic gradient ascent with a 1/t rate,
// and unsupervised co-training on fake relevance labels.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "genm/calculus.hpp"
#include "genm/core_model.hpp"
#include "genm/detail/rng.hpp"
#include "genm/errors.hpp"
#include "genm/surrogate.hpp"

namespace genm {

// ---------------------------------------------------------------------------
// Start points

/// Every vector in {0,1}^K, in lexicographic order (the zero vector first).
struct AllBinaryStarts {};

/// `count` vectors with entries uniform in [0, upper].
struct RandomStarts {
  std::size_t count = 8;
  std::uint64_t seed = 0;
  double upper = 1.0;
};

struct ExplicitStarts {
  std::vector<Weights> points;
};

using StartPolicy = std::variant<AllBinaryStarts, RandomStarts, ExplicitStarts>;

inline std::vector<Weights> make_starts(const StartPolicy& policy, std::size_t rankers) {
  const auto K = static_cast<Eigen::Index>(rankers);
  std::vector<Weights> out;
  if (std::holds_alternative<AllBinaryStarts>(policy)) {
    if (rankers > 20) throw invalid_argument("binary starts need K <= 20, got " + std::to_string(rankers));
    const std::uint64_t n = std::uint64_t{1} << rankers;
    for (std::uint64_t code = 0; code < n; ++code) {
      Weights w(K);
      for (Eigen::Index k = 0; k < K; ++k) w[k] = static_cast<double>((code >> (K - 1 - k)) & 1U);
      out.push_back(std::move(w));
    }
  } else if (const auto* r = std::get_if<RandomStarts>(&policy)) {
    std::mt19937_64 rng(r->seed);
    for (std::size_t i = 0; i < r->count; ++i) {
      Weights w(K);
      for (Eigen::Index k = 0; k < K; ++k) w[k] = detail::uniform(rng, 0.0, r->upper);
      out.push_back(std::move(w));
    }
  } else {
    out = std::get<ExplicitStarts>(policy).points;
    for (const auto& w : out) {
      if (w.size() != K) throw invalid_argument("explicit start has wrong length");
    }
  }
  if (out.empty()) throw invalid_argument("no start points");
  return out;
}

// ---------------------------------------------------------------------------
// Results

struct ClampResult {
  Weights weights;
  bool degenerate = false;  ///< every entry ended up zero
};

/// Replaces negative weights by zero.
inline ClampResult clamp_negative_weights(const Weights& w) {
  ClampResult out{w.cwiseMax(0.0), false};
  out.degenerate = (out.weights.array() == 0.0).all();
  return out;
}

/// Outcome of one optimisation run from one start point.
struct StartResult {
  Weights initial;
  Weights final_weights;
  std::vector<double> trajectory;  ///< objective at the start and after every accepted iterate / epoch
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double final_map = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  bool aborted = false;
  std::string diagnostic;
};

struct FitResult {
  Weights best_weights;  ///< clamped, nonnegative
  Weights raw_weights;
  bool degenerate = false;
  std::vector<StartResult> per_start;
  std::size_t chosen_start_index = 0;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double final_map = std::numeric_limits<double>::quiet_NaN();
  /// An initial point ranked better (exact MAP) than every optimised result
  /// and was returned instead.
  bool start_fallback = false;
};

// ---------------------------------------------------------------------------
// Batch Newton

struct BatchConfig {
  double beta = 200.0;
  double epsilon = 0.0;
  std::size_t max_iters = 100;
  StartPolicy starts = AllBinaryStarts{};
  bool cutoff_enabled = true;
  bool literal_listing = false;
  std::size_t max_halvings = 20;
  std::size_t threads = 0;  ///< 0: hardware concurrency

  void validate() const {
    SurrogateConfig{beta}.validate();
    if (max_iters < 1) throw invalid_argument("max_iters must be >= 1");
    if (!(epsilon >= 0.0)) throw invalid_argument("epsilon must be >= 0");
  }
};

/// Gradient norm below which a point counts as stationary.
inline constexpr double kStationaryGradient = 1e-12;

/// Safeguarded Newton ascent on the surrogate from one start.
///
/// Each iteration evaluates the Newton point w - H^{-1} g and a backtracked
/// gradient-ascent point and keeps whichever raises the surrogate more. The
/// run stops once no candidate strictly increases the objective, the gain
/// drops below epsilon, or max_iters is reached. Accepted iterates never
/// decrease the objective.
inline StartResult newton_batch(const Dataset& data, const Weights& start, const BatchConfig& cfg) {
  cfg.validate();
  data.require_relevance();
  if (static_cast<std::size_t>(start.size()) != data.num_rankers()) {
    throw invalid_argument("start has " + std::to_string(start.size()) + " entries, dataset has " +
                           std::to_string(data.num_rankers()) + " rankers");
  }
  const SurrogateConfig sc{cfg.beta};
  const auto queries = all_queries(data);

  StartResult res;
  res.initial = start;
  Weights w = start;
  double f = surrogate_objective(data, w, sc);
  res.trajectory.push_back(f);
  if (!std::isfinite(f)) {
    res.aborted = true;
    res.diagnostic = "non-finite objective at start";
    res.final_weights = w;
    return res;
  }

  DerivativeOptions opt;
  opt.window = cfg.cutoff_enabled ? 2.0 / cfg.beta : std::numeric_limits<double>::infinity();
  opt.literal_listing = cfg.literal_listing;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    auto gh = derivatives(data, queries, w, sc, opt);
    // Outside the window every derivative is zeroed; that is not stationarity.
    if (cfg.cutoff_enabled && !(gh.gradient.norm() > kStationaryGradient)) {
      DerivativeOptions exact = opt;
      exact.window = std::numeric_limits<double>::infinity();
      exact.literal_listing = false;
      gh = derivatives(data, queries, w, sc, exact);
    }
    const Eigen::VectorXd& grad = gh.gradient;
    if (!grad.allFinite() || !gh.hessian.allFinite()) {
      res.diagnostic = "non-finite derivatives";
      break;
    }
    const double gnorm = grad.norm();
    if (!(gnorm > kStationaryGradient)) {
      res.diagnostic = "stationary";
      break;
    }

    std::optional<Weights> best;
    double best_f = f;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(gh.hessian);
    if (lu.isInvertible()) {
      Weights cand = w - lu.solve(grad);
      if (cand.allFinite()) {
        const double fc = surrogate_objective(data, cand, sc);
        if (std::isfinite(fc) && fc > best_f) {
          best = cand;
          best_f = fc;
        }
      }
    }

    double step = std::max(1.0, w.norm()) / gnorm;
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
      Weights cand = w + step * grad;
      const double fc = surrogate_objective(data, cand, sc);
      if (std::isfinite(fc) && fc > f) {
        if (fc > best_f) {
          best = cand;
          best_f = fc;
        }
        break;
      }
    }

    if (!best) {
      res.diagnostic = "no ascent step";
      break;
    }
    const double gain = best_f - f;
    w = *best;
    f = best_f;
    res.trajectory.push_back(f);
    ++res.iterations;
    if (gain < cfg.epsilon) {
      res.diagnostic = "gain below epsilon";
      break;
    }
  }
  if (res.diagnostic.empty()) res.diagnostic = "max_iters reached";
  res.final_weights = w;
  res.final_objective = f;
  return res;
}

// ---------------------------------------------------------------------------
// Multi-start driver

inline std::size_t resolve_threads(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested;
  if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

struct MultistartOptions {
  std::size_t threads = 0;
  /// Record exact MAP per start (needs relevance judgements).
  bool record_map = true;
  /// Return an initial point instead of the optimised result when its exact
  /// MAP is strictly higher. Only tie-free, non-zero initial points qualify.
  bool start_fallback = true;
};

/// Runs `run_one(start)` for every start (concurrently when threads > 1),
/// keeps the result with the largest final objective (lowest index on ties)
/// and clamps its negative weights.
template <class RunOne>
FitResult multistart(const Dataset& data, const std::vector<Weights>& starts, RunOne&& run_one,
                     const MultistartOptions& mopt, const SurrogateConfig& sc) {
  if (starts.empty()) throw invalid_argument("multistart needs at least one start");
  std::vector<StartResult> results(starts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < starts.size(); i = next++) {
      try {
        results[i] = run_one(starts[i]);
      } catch (const std::exception& e) {
        results[i] = StartResult{};
        results[i].initial = starts[i];
        results[i].final_weights = starts[i];
        results[i].aborted = true;
        results[i].diagnostic = e.what();
      }
    }
  };
  const auto n_threads = resolve_threads(mopt.threads, starts.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  FitResult fit;
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (r.aborted || !std::isfinite(r.final_objective)) {
      r.aborted = true;
      continue;
    }
    if (mopt.record_map) r.final_map = map_exact(data, clamp_negative_weights(r.final_weights).weights);
    if (!chosen || r.final_objective > results[*chosen].final_objective) chosen = i;
  }
  if (!chosen) {
    std::string why = results.front().diagnostic;
    throw optimization_error("all " + std::to_string(results.size()) + " starts aborted (first: " + why + ")");
  }

  fit.chosen_start_index = *chosen;
  fit.raw_weights = results[*chosen].final_weights;
  auto clamped = clamp_negative_weights(fit.raw_weights);
  fit.best_weights = clamped.weights;
  fit.degenerate = clamped.degenerate;
  fit.final_objective = results[*chosen].final_objective;
  if (mopt.record_map) fit.final_map = map_exact(data, fit.best_weights);
  if (mopt.record_map && mopt.start_fallback) {
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const auto s = clamp_negative_weights(starts[i]);
      if (s.degenerate || has_relevant_ties(data, s.weights)) continue;
      const double m = map_exact(data, s.weights);
      if (m > fit.final_map) {
        fit.final_map = m;
        fit.best_weights = s.weights;
        fit.raw_weights = starts[i];
        fit.degenerate = false;
        fit.chosen_start_index = i;
        fit.final_objective = surrogate_objective(data, starts[i], sc);
        fit.start_fallback = true;
      }
    }
  }
  fit.per_start = std::move(results);
  return fit;
}

inline FitResult fit_batch(const Dataset& data, const BatchConfig& cfg) {
  cfg.validate();
  data.require_relevance();
  const auto starts = make_starts(cfg.starts, data.num_rankers());
  return multistart(
      data, starts, [&](const Weights& s) { return newton_batch(data, s, cfg); }, MultistartOptions{cfg.threads},
      SurrogateConfig{cfg.beta});
}

// ---------------------------------------------------------------------------
// Online SGD

struct OnlineConfig {
  double beta = 200.0;
  double epsilon = 1e-6;
  std::size_t max_epochs = 200;
  StartPolicy starts = AllBinaryStarts{};
  /// Derivative window; infinity uses exact per-query gradients.
  double window = std::numeric_limits<double>::infinity();
  /// Reshuffle the query order every epoch with this seed; unset keeps the given order.
  std::optional<std::uint64_t> shuffle_seed;
  /// Diagnostics only: fixed learning rate instead of 1/t.
  std::optional<double> constant_rate;
  std::size_t threads = 0;

  void validate() const {
    SurrogateConfig{beta}.validate();
    if (!(epsilon > 0.0)) throw invalid_argument("online epsilon must be > 0");
    if (max_epochs < 1) throw invalid_argument("max_epochs must be >= 1");
  }
};

/// Learning rate at global step t.
inline double learning_rate(std::uint64_t t) { return 1.0 / static_cast<double>(t); }

/// Mutable state of a stochastic ascent: weights and the global step counter.
/// The counter starts at 1 and is incremented before each update, so the
/// first update uses rate 1/2.
struct SgdState {
  Weights weights;
  std::uint64_t t = 1;
};

/// Extra gradient term added to the per-query surrogate gradient.
using PenaltyGradient = std::function<Eigen::VectorXd(std::size_t query, const Weights& w)>;

/// One pass over `order`, one gradient step per query.
inline void sgd_pass(const Dataset& data, const std::vector<std::size_t>& order, SgdState& state,
                     const SurrogateConfig& sc, double window, std::optional<double> constant_rate = std::nullopt,
                     const PenaltyGradient& penalty = nullptr) {
  DerivativeOptions opt;
  opt.window = window;
  opt.with_hessian = false;
  for (auto q : order) {
    ++state.t;
    Eigen::VectorXd grad = derivatives(data, {q}, state.weights, sc, opt).gradient;
    if (penalty) grad += penalty(q, state.weights);
    const double eta = constant_rate ? *constant_rate : learning_rate(state.t);
    Weights next = state.weights + eta * grad;
    if (!next.allFinite()) {
      throw std::runtime_error("non-finite SGD update at step " + std::to_string(state.t) + " (query " +
                               data.panel(q).query_id() + ")");
    }
    state.weights = std::move(next);
  }
}

/// Per-query stochastic gradient ascent over the stream `data` (queries in
/// dataset order unless a shuffle seed is set). The objective over all
/// queries is evaluated once per epoch; the run stops when it changes by less
/// than epsilon or after max_epochs.
inline StartResult sgd_online(const Dataset& data, const Weights& start, const OnlineConfig& cfg) {
  cfg.validate();
  data.require_relevance();
  if (static_cast<std::size_t>(start.size()) != data.num_rankers()) throw invalid_argument("start size mismatch");
  const SurrogateConfig sc{cfg.beta};
  StartResult res;
  res.initial = start;
  SgdState state{start, 1};
  double f = surrogate_objective(data, start, sc);
  res.trajectory.push_back(f);

  auto order = all_queries(data);
  std::optional<std::mt19937_64> rng;
  if (cfg.shuffle_seed) rng.emplace(*cfg.shuffle_seed);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (rng) detail::shuffle(order, *rng);
    sgd_pass(data, order, state, sc, cfg.window, cfg.constant_rate);
    const double next = surrogate_objective(data, state.weights, sc);
    if (!std::isfinite(next)) throw std::runtime_error("non-finite objective after epoch " + std::to_string(epoch + 1));
    res.trajectory.push_back(next);
    ++res.iterations;
    const double change = std::fabs(next - f);
    f = next;
    if (change < cfg.epsilon) {
      res.diagnostic = "change below epsilon";
      break;
    }
  }
  if (res.diagnostic.empty()) res.diagnostic = "max_epochs reached";
  res.final_weights = state.weights;
  res.final_objective = f;
  return res;
}

inline FitResult fit_online(const Dataset& data, const OnlineConfig& cfg) {
  cfg.validate();
  data.require_relevance();
  const auto starts = make_starts(cfg.starts, data.num_rankers());
  return multistart(
      data, starts, [&](const Weights& s) { return sgd_online(data, s, cfg); }, MultistartOptions{cfg.threads},
      SurrogateConfig{cfg.beta});
}

// ---------------------------------------------------------------------------
// Unsupervised co-training

struct UnsupConfig {
  double beta = 200.0;
  double epsilon = 1e-6;
  double score_threshold = 0.5;
  double sigma = 0.0;
  std::size_t max_epochs = 50;
  StartPolicy starts = AllBinaryStarts{};
  double window = std::numeric_limits<double>::infinity();
  std::size_t threads = 0;

  void validate() const {
    SurrogateConfig{beta}.validate();
    if (!(epsilon > 0.0)) throw invalid_argument("unsupervised epsilon must be > 0");
    if (!(sigma >= 0.0)) throw invalid_argument("sigma must be >= 0");
    if (max_epochs < 1) throw invalid_argument("max_epochs must be >= 1");
  }
};

/// Weight vector without entry `k`.
inline Weights drop_entry(const Weights& w, std::size_t k) {
  Weights out(w.size() - 1);
  for (Eigen::Index i = 0, o = 0; i < w.size(); ++i) {
    if (static_cast<std::size_t>(i) != k) out[o++] = w[i];
  }
  return out;
}

/// Inverse of drop_entry: puts `value` back at position `k`.
inline Weights insert_entry(const Weights& reduced, std::size_t k, double value) {
  Weights out(reduced.size() + 1);
  for (Eigen::Index i = 0, o = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::size_t>(i) == k ? value : reduced[o++];
  }
  return out;
}

/// Teacher `k`'s view of the data: ranker k's column removed, and each
/// query's relevance replaced by the documents ranker k scores above the
/// threshold. Queries without such documents are left out. `source` maps the
/// reduced queries back to indices of `data`.
struct FakeLabelled {
  std::optional<Dataset> data;
  std::vector<std::size_t> source;
};

inline FakeLabelled fake_labelled_reduced(const Dataset& data, std::size_t teacher, double threshold) {
  const auto K = static_cast<Eigen::Index>(data.num_rankers());
  const auto t = static_cast<Eigen::Index>(teacher);
  std::vector<ScorePanel> panels;
  std::vector<RelevanceSet> rel;
  FakeLabelled out;
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    const auto& p = data.panel(i);
    RelevanceSet r{p.query_id(), {}};
    for (std::size_t d = 0; d < p.num_docs(); ++d) {
      if (p.scores()(static_cast<Eigen::Index>(d), t) > threshold) r.relevant_docs.insert(p.doc_ids()[d]);
    }
    if (r.relevant_docs.empty()) continue;
    Eigen::MatrixXd reduced(p.scores().rows(), K - 1);
    for (Eigen::Index k = 0, o = 0; k < K; ++k) {
      if (k != t) reduced.col(o++) = p.scores().col(k);
    }
    panels.emplace_back(p.query_id(), p.doc_ids(), std::move(reduced));
    rel.push_back(std::move(r));
    out.source.push_back(i);
  }
  if (panels.empty()) return out;
  auto tags = data.ranker_tags();
  tags.erase(tags.begin() + static_cast<std::ptrdiff_t>(teacher));
  out.data.emplace(std::move(panels), std::move(rel), std::move(tags));
  return out;
}

/// Gradient of -(sigma/2) * sum_d (H_d - s_d(teacher))^2 for one query, with
/// respect to the non-teacher weights. H_d uses the full weight vector, the
/// teacher's weight held at `teacher_weight`.
inline Eigen::VectorXd teacher_penalty_gradient(const ScorePanel& full_panel, std::size_t teacher,
                                                double teacher_weight, const Weights& reduced, double sigma) {
  const auto full_w = insert_entry(reduced, teacher, teacher_weight);
  const auto h = ensemble_scores(full_panel, full_w);
  const auto& x = full_panel.scores();
  const auto t = static_cast<Eigen::Index>(teacher);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(reduced.size());
  for (Eigen::Index d = 0; d < x.rows(); ++d) {
    const double resid = h[d] - x(d, t);
    for (Eigen::Index k = 0, o = 0; k < x.cols(); ++k) {
      if (k == t) continue;
      out[o++] -= sigma * x(d, k) * resid;
    }
  }
  return out;
}

/// One teaching round: an SGD pass over the teacher's fake-labelled reduced
/// data, updating every weight except the teacher's. Returns false when the
/// teacher produced no fake-relevant documents (weights untouched).
inline bool cotrain_round(const Dataset& data, const FakeLabelled& view, std::size_t teacher, SgdState& state,
                          const UnsupConfig& cfg) {
  if (!view.data) return false;
  const double frozen = state.weights[static_cast<Eigen::Index>(teacher)];
  SgdState reduced{drop_entry(state.weights, teacher), state.t};
  PenaltyGradient penalty;
  if (cfg.sigma > 0.0) {
    penalty = [&](std::size_t q, const Weights& w) {
      return teacher_penalty_gradient(data.panel(view.source[q]), teacher, frozen, w, cfg.sigma);
    };
  }
  sgd_pass(*view.data, all_queries(*view.data), reduced, SurrogateConfig{cfg.beta}, cfg.window, std::nullopt,
           penalty);
  state.weights = insert_entry(reduced.weights, teacher, frozen);
  state.t = reduced.t;
  return true;
}

/// Mean over teachers of the surrogate on each teacher's reduced view.
inline double cotrain_objective(const std::vector<FakeLabelled>& views, const Weights& w, const SurrogateConfig& sc) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (!views[k].data) continue;
    total += surrogate_objective(*views[k].data, drop_entry(w, k), sc);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(n);
}

inline std::vector<FakeLabelled> teacher_views(const Dataset& data, double threshold) {
  std::vector<FakeLabelled> views;
  bool any = false;
  for (std::size_t k = 0; k < data.num_rankers(); ++k) {
    views.push_back(fake_labelled_reduced(data, k, threshold));
    any = any || views.back().data.has_value();
  }
  if (!any) {
    throw threshold_too_high("no ranker scores any document above " + std::to_string(threshold));
  }
  return views;
}

/// Co-training: each epoch lets every ranker in turn label documents above
/// the score threshold as relevant and takes an SGD pass on the remaining
/// rankers' weights. Relevance sets in `data` are ignored.
inline StartResult unsup_cotrain(const Dataset& data, const Weights& start, const UnsupConfig& cfg) {
  cfg.validate();
  if (data.num_rankers() < 2) throw invalid_argument("co-training needs at least two rankers");
  if (static_cast<std::size_t>(start.size()) != data.num_rankers()) throw invalid_argument("start size mismatch");
  const SurrogateConfig sc{cfg.beta};
  const auto views = teacher_views(data, cfg.score_threshold);

  StartResult res;
  res.initial = start;
  SgdState state{start, 1};
  double f = cotrain_objective(views, start, sc);
  res.trajectory.push_back(f);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t k = 0; k < data.num_rankers(); ++k) cotrain_round(data, views[k], k, state, cfg);
    const double next = cotrain_objective(views, state.weights, sc);
    if (!std::isfinite(next)) throw std::runtime_error("non-finite objective after epoch " + std::to_string(epoch + 1));
    res.trajectory.push_back(next);
    ++res.iterations;
    const double change = std::fabs(next - f);
    f = next;
    if (change < cfg.epsilon) {
      res.diagnostic = "change below epsilon";
      break;
    }
  }
  if (res.diagnostic.empty()) res.diagnostic = "max_epochs reached";
  res.final_weights = state.weights;
  res.final_objective = f;
  return res;
}

inline FitResult fit_unsup(const Dataset& data, const UnsupConfig& cfg) {
  cfg.validate();
  const auto starts = make_starts(cfg.starts, data.num_rankers());
  // Surface configuration errors before fanning out.
  (void)teacher_views(data, cfg.score_threshold);
  bool labelled = true;
  for (const auto& r : data.relevance()) labelled = labelled && !r.relevant_docs.empty();
  return multistart(
      data, starts, [&](const Weights& s) { return unsup_cotrain(data, s, cfg); },
      MultistartOptions{cfg.threads, labelled, false},
      SurrogateConfig{cfg.beta});
}

}  // namespace genm
