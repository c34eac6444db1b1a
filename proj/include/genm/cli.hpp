#pragma once

// Command-line front end: train, apply, eval, tfidf, synth, compare.
//
// Exit codes: 0 success, 1 runtime or optimisation failure, 2 usage error.
// Every output is assembled in memory and written only after all inputs have
// been read and validated, so a failing invocation leaves no partial files.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genm/genm.hpp"

#ifndef GENM_VERSION
#define GENM_VERSION "0.0.0"
#endif

namespace genm::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kWeightsFormat = "genm-weights";
inline constexpr int kWeightsVersion = 1;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline json vec(const Weights& w) {
  json a = json::array();
  for (Eigen::Index k = 0; k < w.size(); ++k) a.push_back(number(w[k]));
  return a;
}

inline json tagged(const std::vector<std::string>& tags, const Weights& w) {
  json o = json::object();
  for (std::size_t k = 0; k < tags.size(); ++k) o[tags[k]] = number(w[static_cast<Eigen::Index>(k)]);
  return o;
}

class Manifest {
 public:
  Manifest(std::string command, bool timestamps = true)
      : command_(std::move(command)), timestamps_(timestamps), started_(timestamps ? utc_now() : "") {}

  json& config() { return config_; }

  json finish() const {
    json m;
    m["command"] = command_;
    m["version"] = GENM_VERSION;
    m["config"] = config_;
    if (timestamps_) {
      m["started"] = started_;
      m["finished"] = utc_now();
    }
    return m;
  }

 private:
  std::string command_;
  bool timestamps_;
  std::string started_;
  json config_ = json::object();
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
auto with_file(const std::string& path, F&& parse) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return parse(in);
  } catch (const parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  } catch (const duplicate_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

/// Parses run files concurrently; each file must carry one tag.
inline std::vector<RankerRun> load_runs(const std::vector<std::string>& paths) {
  std::vector<std::future<RankerRun>> jobs;
  for (const auto& p : paths) {
    jobs.push_back(std::async(std::launch::async, [p] {
      auto recs = with_file(p, [](std::istream& in) { return parse_run(in); });
      if (recs.empty()) throw std::runtime_error(p + ": run file has no records");
      return ranker_run(std::move(recs));
    }));
  }
  std::vector<RankerRun> runs;
  for (auto& j : jobs) runs.push_back(j.get());
  return runs;
}

inline std::vector<QrelRecord> load_qrels(const std::string& path) {
  return with_file(path, [](std::istream& in) { return parse_qrels(in); });
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
  }
  std::filesystem::rename(tmp, target);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

inline std::size_t default_threads() {
  if (const char* env = std::getenv("GENM_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    throw usage_error(std::string("GENM_THREADS must be a nonnegative integer, got '") + env + "'");
  }
  return 0;
}

inline StartPolicy parse_starts(const std::string& text, std::uint64_t seed) {
  if (text == "binary") return AllBinaryStarts{};
  const std::string prefix = "random:";
  if (text.rfind(prefix, 0) == 0) {
    const auto n = text.substr(prefix.size());
    std::size_t count = 0;
    auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), count);
    if (ec == std::errc{} && ptr == n.data() + n.size() && count > 0) return RandomStarts{count, seed, 1.0};
  }
  throw usage_error("--starts must be 'binary' or 'random:N' with N >= 1, got '" + text + "'");
}

inline std::string serialize(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  serialize_run(out, records);
  return out.str();
}

inline json start_summary(const StartResult& r) {
  json s;
  s["initial"] = vec(r.initial);
  s["final"] = vec(r.final_weights);
  s["final_objective"] = number(r.final_objective);
  s["final_map"] = number(r.final_map);
  s["iterations"] = r.iterations;
  s["aborted"] = r.aborted;
  s["diagnostic"] = r.diagnostic;
  return s;
}

inline json cv_json(const CvReport& cv, const std::vector<std::string>& tags) {
  json j;
  j["split_seed"] = cv.split_seed;
  j["fold_maps"] = {number(cv.fold_maps[0]), number(cv.fold_maps[1])};
  j["mean_map"] = number(cv.mean_map);
  j["fold_weights"] = {tagged(tags, cv.fold_weights[0]), tagged(tags, cv.fold_weights[1])};
  j["fold_test_queries"] = {cv.fold_queries[0], cv.fold_queries[1]};
  return j;
}

inline json significance_json(const SignificanceReport& s) {
  json j;
  j["statistic"] = s.statistic;
  j["w_plus"] = s.w_plus;
  j["w_minus"] = s.w_minus;
  j["p_value"] = s.p_value;
  j["n_effective"] = s.n_effective;
  j["exact"] = s.exact;
  j["insufficient_data"] = s.insufficient_data;
  j["significant_95"] = s.significant_95;
  return j;
}

/// Exact weights for the given ranker tags, read from a weights file.
struct LoadedWeights {
  std::vector<std::string> tags;
  Weights weights;
};

inline LoadedWeights load_weights(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": not a weights file (" + e.what() + ")");
  }
  if (j.value("format", "") != kWeightsFormat) throw std::runtime_error(path + ": not a weights file");
  if (j.value("version", 0) != kWeightsVersion) throw std::runtime_error(path + ": unsupported weights version");
  LoadedWeights out;
  const auto& w = j.at("weights");
  out.weights.resize(static_cast<Eigen::Index>(w.size()));
  Eigen::Index k = 0;
  for (const auto& [tag, value] : w.items()) {
    out.tags.push_back(tag);
    out.weights[k++] = value.get<double>();
  }
  return out;
}

/// Orders `runs` to match `tags`; errors list the tags missing on either side.
inline std::vector<RankerRun> align_runs(std::vector<RankerRun> runs, const std::vector<std::string>& tags) {
  std::map<std::string, RankerRun> by_tag;
  for (auto& r : runs) {
    const auto tag = r.tag;
    if (!by_tag.emplace(tag, std::move(r)).second) throw std::runtime_error("two run files carry tag " + tag);
  }
  std::vector<std::string> missing_runs;
  for (const auto& t : tags) {
    if (!by_tag.count(t)) missing_runs.push_back(t);
  }
  std::vector<std::string> unweighted;
  const std::set<std::string> known(tags.begin(), tags.end());
  for (const auto& [t, r] : by_tag) {
    if (!known.count(t)) unweighted.push_back(t);
  }
  if (!missing_runs.empty() || !unweighted.empty()) {
    std::string msg = "weight/ranker tag mismatch";
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += (s.empty() ? "" : ", ") + t;
      return s;
    };
    if (!missing_runs.empty()) msg += "; no run for: " + list(missing_runs);
    if (!unweighted.empty()) msg += "; no weight for: " + list(unweighted);
    throw std::runtime_error(msg);
  }
  std::vector<RankerRun> out;
  for (const auto& t : tags) out.push_back(std::move(by_tag.at(t)));
  return out;
}

/// Fused run: ensemble scores per query, descending, ties by doc id.
inline std::vector<RunRecord> fuse(const Dataset& data, const Weights& w, const std::string& tag) {
  std::vector<RunRecord> out;
  for (std::size_t i = 0; i < data.num_queries(); ++i) {
    const auto& panel = data.panel(i);
    const auto scores = ensemble_scores(panel, w);
    std::vector<RunRecord> recs;
    for (std::size_t r = 0; r < panel.num_docs(); ++r) {
      recs.push_back(RunRecord{panel.query_id(), panel.doc_ids()[r], 0, scores[static_cast<Eigen::Index>(r)], tag});
    }
    rerank(recs);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

/// Single-run dataset scored with weight 1.
inline Dataset single_run_dataset(const std::string& run_path, const std::vector<QrelRecord>& qrels,
                                  std::vector<std::string>& warnings) {
  auto recs = with_file(run_path, [](std::istream& in) { return parse_run(in); });
  // Mixed tags are tolerated here: the file is evaluated as one ranking.
  for (auto& r : recs) r.tag = "run";
  if (recs.empty()) throw std::runtime_error(run_path + ": run file has no records");
  return assemble_dataset({ranker_run(std::move(recs))}, qrels, &warnings);
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string mode = "batch";
  std::vector<std::string> runs;
  std::string qrels;
  std::string out;
  std::string cv_out;
  double beta = 200.0;
  std::optional<double> epsilon;
  std::optional<std::size_t> max_iters;
  std::string starts = "binary";
  double sigma = 0.0;
  double score_threshold = 0.5;
  std::uint64_t seed = 0;
  int folds = 0;
  std::optional<std::size_t> threads;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode != "batch" && a.mode != "online" && a.mode != "unsup") {
    throw usage_error("--mode must be batch, online or unsup");
  }
  const bool unsup = a.mode == "unsup";
  if (unsup && !a.qrels.empty()) throw usage_error("--qrels cannot be used with --mode unsup");
  if (!unsup && a.qrels.empty()) throw usage_error("--qrels is required for --mode " + a.mode);
  if (a.folds != 0 && a.folds != 2) throw usage_error("--folds must be 0 or 2");
  if (unsup && a.folds == 2) throw usage_error("--folds 2 needs judgements and cannot be used with --mode unsup");
  if (a.runs.empty()) throw usage_error("--runs needs at least one file");
  const auto starts = detail::parse_starts(a.starts, a.seed);
  const std::size_t threads = a.threads ? *a.threads : detail::default_threads();
  const std::string cv_out = a.cv_out.empty() ? a.out + ".cv.json" : a.cv_out;

  detail::Manifest manifest("train");
  auto& c = manifest.config();
  c["mode"] = a.mode;
  c["runs"] = a.runs;
  c["qrels"] = a.qrels;
  c["beta"] = a.beta;
  c["starts"] = a.starts;
  c["seed"] = a.seed;
  c["folds"] = a.folds;

  std::function<FitResult(const Dataset&)> fit;
  try {
  if (a.mode == "batch") {
    BatchConfig cfg;
    cfg.beta = a.beta;
    cfg.epsilon = a.epsilon.value_or(cfg.epsilon);
    cfg.max_iters = a.max_iters.value_or(cfg.max_iters);
    cfg.starts = starts;
    cfg.threads = threads;
    cfg.validate();
    c["epsilon"] = cfg.epsilon;
    c["max_iters"] = cfg.max_iters;
    fit = [cfg](const Dataset& d) { return fit_batch(d, cfg); };
  } else if (a.mode == "online") {
    OnlineConfig cfg;
    cfg.beta = a.beta;
    cfg.epsilon = a.epsilon.value_or(cfg.epsilon);
    cfg.max_epochs = a.max_iters.value_or(cfg.max_epochs);
    cfg.starts = starts;
    cfg.threads = threads;
    cfg.validate();
    c["epsilon"] = cfg.epsilon;
    c["max_iters"] = cfg.max_epochs;
    fit = [cfg](const Dataset& d) { return fit_online(d, cfg); };
  } else {
    UnsupConfig cfg;
    cfg.beta = a.beta;
    cfg.epsilon = a.epsilon.value_or(cfg.epsilon);
    cfg.max_epochs = a.max_iters.value_or(cfg.max_epochs);
    cfg.sigma = a.sigma;
    cfg.score_threshold = a.score_threshold;
    cfg.starts = starts;
    cfg.threads = threads;
    cfg.validate();
    c["epsilon"] = cfg.epsilon;
    c["max_iters"] = cfg.max_epochs;
    c["sigma"] = cfg.sigma;
    c["score_threshold"] = cfg.score_threshold;
    fit = [cfg](const Dataset& d) { return fit_unsup(d, cfg); };
  }
  } catch (const invalid_argument& e) {
    throw usage_error(e.what());
  }

  std::vector<std::string> warnings;
  const auto runs = detail::load_runs(a.runs);
  const auto data = unsup ? assemble_unlabelled(runs) : assemble_dataset(runs, detail::load_qrels(a.qrels), &warnings);
  detail::print_warnings(warnings, err);

  const auto result = fit(data);
  std::optional<CvReport> cv;
  if (a.folds == 2) cv = two_fold_cv(data, [&](const Dataset& d) { return fit(d).best_weights; }, a.seed);

  const auto& tags = data.ranker_tags();
  json j;
  j["format"] = kWeightsFormat;
  j["version"] = kWeightsVersion;
  j["mode"] = a.mode;
  j["beta"] = a.beta;
  j["rankers"] = tags;
  j["weights"] = detail::tagged(tags, result.best_weights);
  j["raw_weights"] = detail::tagged(tags, result.raw_weights);
  j["degenerate"] = result.degenerate;
  j["final_objective"] = detail::number(result.final_objective);
  j["final_map"] = detail::number(result.final_map);
  j["chosen_start"] = result.chosen_start_index;
  j["start_fallback"] = result.start_fallback;
  j["per_start"] = json::array();
  for (const auto& s : result.per_start) j["per_start"].push_back(detail::start_summary(s));
  j["warnings"] = warnings;
  j["manifest"] = manifest.finish();
  detail::write_file(a.out, detail::dump(j));
  if (cv) {
    json cj = detail::cv_json(*cv, tags);
    cj["manifest"] = manifest.finish();
    detail::write_file(cv_out, detail::dump(cj));
  }

  out << "weights:";
  for (std::size_t k = 0; k < tags.size(); ++k) out << ' ' << tags[k] << '=' << result.best_weights[static_cast<Eigen::Index>(k)];
  out << '\n';
  if (std::isfinite(result.final_map)) out << "final_map: " << result.final_map << '\n';
  out << "final_objective: " << result.final_objective << '\n';
  if (cv) out << "cv_mean_map: " << cv->mean_map << '\n';
  if (result.degenerate) err << "warning: all learned weights are zero after clamping\n";
  return 0;
}

struct ApplyArgs {
  std::vector<std::string> runs;
  std::string weights;
  std::string out;
};

inline int cmd_apply(const ApplyArgs& a, std::ostream&, std::ostream&) {
  const auto loaded = detail::load_weights(a.weights);
  const auto runs = detail::align_runs(detail::load_runs(a.runs), loaded.tags);
  const auto data = assemble_unlabelled(runs);
  detail::write_file(a.out, detail::serialize(detail::fuse(data, loaded.weights, "gEnM")));
  return 0;
}

struct EvalArgs {
  std::string run;
  std::string qrels;
  std::string metrics = "map,p@1,p@5,pr11";
  std::string out;
  std::string pr_csv;
  bool per_query = false;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  MetricSelection sel{false, {}, false};
  for (const auto& m : detail::split_csv(a.metrics)) {
    if (m == "map") {
      sel.map = true;
    } else if (m == "pr11") {
      sel.pr11 = true;
    } else if (m.rfind("p@", 0) == 0) {
      std::size_t k = 0;
      const auto n = m.substr(2);
      auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
      if (ec != std::errc{} || ptr != n.data() + n.size() || k == 0) throw usage_error("bad metric '" + m + "'");
      sel.precision_at.push_back(k);
    } else {
      throw usage_error("unknown metric '" + m + "' (choose from map, p@k, pr11)");
    }
  }
  if (!sel.map && !sel.pr11 && sel.precision_at.empty()) throw usage_error("--metrics selects nothing");
  if (!a.pr_csv.empty() && !sel.pr11) throw usage_error("--pr-csv needs pr11 among --metrics");
  if (a.per_query && !sel.map) throw usage_error("--per-query needs map among --metrics");

  detail::Manifest manifest("eval");
  manifest.config()["run"] = a.run;
  manifest.config()["qrels"] = a.qrels;
  manifest.config()["metrics"] = a.metrics;

  std::vector<std::string> warnings;
  const auto data = detail::single_run_dataset(a.run, detail::load_qrels(a.qrels), warnings);
  detail::print_warnings(warnings, err);
  const auto rep = evaluate(data, Weights::Ones(1), sel);

  json metrics = json::object();
  if (rep.map) metrics["map"] = *rep.map;
  for (const auto& [k, v] : rep.pr_at) metrics["p@" + std::to_string(k)] = v;
  if (rep.pr_curve) metrics["pr11"] = std::vector<double>(rep.pr_curve->begin(), rep.pr_curve->end());
  json j;
  j["metrics"] = metrics;
  if (a.per_query) j["per_query_ap"] = rep.per_query_ap;
  j["queries"] = data.num_queries();
  j["warnings"] = warnings;
  j["manifest"] = manifest.finish();

  std::string csv;
  if (!a.pr_csv.empty()) {
    std::ostringstream s;
    s << "recall,precision\n";
    for (std::size_t l = 0; l < rep.pr_curve->size(); ++l) {
      s << genm::detail::format_double(static_cast<double>(l) / 10.0) << ','
        << genm::detail::format_double((*rep.pr_curve)[l]) << '\n';
    }
    csv = s.str();
  }
  detail::write_file(a.out, detail::dump(j));
  if (!csv.empty()) detail::write_file(a.pr_csv, csv);
  for (const auto& [name, v] : metrics.items()) {
    if (v.is_number()) out << name << ": " << v.get<double>() << '\n';
  }
  return 0;
}

struct TfidfArgs {
  std::string corpus;
  std::string queries;
  std::string stopwords;
  std::string out;
  std::string tag = "tfidf";
};

inline int cmd_tfidf(const TfidfArgs& a, std::ostream&, std::ostream& err) {
  const auto docs = detail::with_file(a.corpus, [](std::istream& in) { return read_texts(in); });
  const auto queries = detail::with_file(a.queries, [](std::istream& in) { return read_texts(in); });
  std::set<std::string> stop;
  if (!a.stopwords.empty()) stop = detail::with_file(a.stopwords, [](std::istream& in) { return read_stopwords(in); });
  std::vector<std::string> warnings;
  const auto runs = tfidf_rank(preprocess(docs, queries, stop), a.tag, &warnings);
  detail::print_warnings(warnings, err);
  detail::write_file(a.out, detail::serialize(flatten(runs)));
  return 0;
}

struct SynthArgs {
  SynthParams params;
  std::string out;
};

/// Writes run_<tag>.txt per ranker, qrels.txt and planted.json. The manifest
/// carries no timestamps so that equal flags give identical directories.
inline int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream&) {
  SynthResult r = [&] {
    try {
      return synth_generate(a.params);
    } catch (const invalid_argument& e) {
      throw usage_error(e.what());
    }
  }();
  detail::Manifest manifest("synth", false);
  auto& c = manifest.config();
  c["rankers"] = a.params.rankers;
  c["queries"] = a.params.queries;
  c["docs"] = a.params.docs;
  c["relevant"] = a.params.relevant;
  c["noise"] = a.params.noise;
  c["seed"] = a.params.seed;
  c["noise_rankers"] = a.params.noise_rankers;
  c["shared_signal"] = a.params.shared_signal;

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& run : synth_runs(r.dataset)) {
    files.emplace_back("run_" + run.tag + ".txt", detail::serialize(run.records));
  }
  std::ostringstream q;
  serialize_qrels(q, synth_qrels(r.dataset));
  files.emplace_back("qrels.txt", q.str());
  json p;
  p["rankers"] = r.dataset.ranker_tags();
  p["planted"] = detail::tagged(r.dataset.ranker_tags(), r.planted);
  p["planted_map"] = map_exact(r.dataset, r.planted);
  p["advantage_verified"] = r.advantage_verified;
  p["attempts"] = r.attempts;
  p["manifest"] = manifest.finish();
  files.emplace_back("planted.json", detail::dump(p));

  const std::filesystem::path dir(a.out);
  for (const auto& [name, content] : files) detail::write_file((dir / name).string(), content);
  out << "wrote " << files.size() << " files to " << a.out << '\n';
  return 0;
}

struct CompareArgs {
  std::string run_a;
  std::string run_b;
  std::string qrels;
  std::string out;
};

/// Per-query AP of both runs on the queries they share, and the Wilcoxon
/// signed-rank test of AP(a) against AP(b).
inline int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  detail::Manifest manifest("compare");
  manifest.config()["run_a"] = a.run_a;
  manifest.config()["run_b"] = a.run_b;
  manifest.config()["qrels"] = a.qrels;

  const auto qrels = detail::load_qrels(a.qrels);
  std::vector<std::string> warnings;
  const auto da = detail::single_run_dataset(a.run_a, qrels, warnings);
  const auto db = detail::single_run_dataset(a.run_b, qrels, warnings);
  const Weights one = Weights::Ones(1);
  std::map<std::string, double> ap_a;
  std::map<std::string, double> ap_b;
  for (std::size_t i = 0; i < da.num_queries(); ++i) ap_a[da.panel(i).query_id()] = average_precision_exact(da, i, one);
  for (std::size_t i = 0; i < db.num_queries(); ++i) ap_b[db.panel(i).query_id()] = average_precision_exact(db, i, one);

  std::vector<std::string> shared;
  std::vector<double> va;
  std::vector<double> vb;
  for (const auto& [q, v] : ap_a) {
    auto it = ap_b.find(q);
    if (it == ap_b.end()) {
      warnings.push_back("query " + q + " only in run a; skipped");
      continue;
    }
    shared.push_back(q);
    va.push_back(v);
    vb.push_back(it->second);
  }
  for (const auto& [q, v] : ap_b) {
    if (!ap_a.count(q)) warnings.push_back("query " + q + " only in run b; skipped");
  }
  if (shared.empty()) throw empty_dataset_error("the two runs share no evaluable query");
  detail::print_warnings(warnings, err);
  const auto sig = wilcoxon_signed_rank(va, vb);

  json j;
  j["queries"] = shared;
  j["ap_a"] = va;
  j["ap_b"] = vb;
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    mean_a += va[i];
    mean_b += vb[i];
  }
  j["map_a"] = mean_a / static_cast<double>(va.size());
  j["map_b"] = mean_b / static_cast<double>(vb.size());
  j["wilcoxon"] = detail::significance_json(sig);
  j["warnings"] = warnings;
  j["manifest"] = manifest.finish();
  detail::write_file(a.out, detail::dump(j));
  out << "map_a: " << j["map_a"].get<double>() << "\nmap_b: " << j["map_b"].get<double>() << "\np_value: " << sig.p_value
      << (sig.insufficient_data ? " (insufficient data)" : "") << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Ensemble ranking by direct MAP optimisation", "genm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(GENM_VERSION));

  TrainArgs train;
  std::optional<double> epsilon;
  std::optional<std::size_t> max_iters;
  std::optional<std::size_t> threads;
  auto* t = app.add_subcommand("train", "learn ensemble weights");
  t->add_option("--mode", train.mode, "batch | online | unsup")->capture_default_str();
  t->add_option("--runs", train.runs, "run files, one per ranker")->required()->expected(1, -1);
  t->add_option("--qrels", train.qrels, "relevance judgements (batch, online)");
  t->add_option("--out", train.out, "weights file")->required();
  t->add_option("--cv-out", train.cv_out, "cross-validation report (default <out>.cv.json)");
  t->add_option("--beta", train.beta, "sigmoid sharpness")->capture_default_str();
  t->add_option("--epsilon", epsilon, "convergence tolerance");
  t->add_option("--max-iters", max_iters, "iterations (batch) or epochs (online, unsup)");
  t->add_option("--starts", train.starts, "binary | random:N")->capture_default_str();
  t->add_option("--sigma", train.sigma, "teacher penalty (unsup)")->capture_default_str();
  t->add_option("--score-threshold", train.score_threshold, "fake relevance threshold (unsup)")->capture_default_str();
  t->add_option("--seed", train.seed, "seed for random starts and fold split")->capture_default_str();
  t->add_option("--folds", train.folds, "0 or 2")->capture_default_str();
  t->add_option("--threads", threads, "parallel starts (default $GENM_THREADS or all cores)");

  ApplyArgs apply;
  auto* ap = app.add_subcommand("apply", "fuse runs with learned weights");
  ap->add_option("--runs", apply.runs, "run files")->required()->expected(1, -1);
  ap->add_option("--weights", apply.weights, "weights file")->required();
  ap->add_option("--out", apply.out, "fused run file")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a run");
  e->add_option("--run", ev.run, "run file")->required();
  e->add_option("--qrels", ev.qrels, "relevance judgements")->required();
  e->add_option("--metrics", ev.metrics, "comma-separated subset of map, p@k, pr11")->capture_default_str();
  e->add_option("--out", ev.out, "report file")->required();
  e->add_option("--pr-csv", ev.pr_csv, "interpolated precision-recall as CSV");
  e->add_flag("--per-query", ev.per_query, "include per-query AP");

  TfidfArgs tf;
  auto* f = app.add_subcommand("tfidf", "rank a corpus with tf-idf cosine similarity");
  f->add_option("--corpus", tf.corpus, "documents, id<TAB>text")->required();
  f->add_option("--queries", tf.queries, "queries, id<TAB>text")->required();
  f->add_option("--stopwords", tf.stopwords, "one word per line");
  f->add_option("--out", tf.out, "run file")->required();
  f->add_option("--tag", tf.tag, "ranker tag")->capture_default_str();

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "generate a synthetic dataset");
  s->add_option("--rankers", sy.params.rankers)->capture_default_str();
  s->add_option("--queries", sy.params.queries)->capture_default_str();
  s->add_option("--docs", sy.params.docs)->capture_default_str();
  s->add_option("--relevant", sy.params.relevant)->capture_default_str();
  s->add_option("--noise", sy.params.noise)->capture_default_str();
  s->add_option("--seed", sy.params.seed)->capture_default_str();
  s->add_option("--noise-rankers", sy.params.noise_rankers, "0-based indices of pure-noise rankers");
  s->add_option("--shared-signal", sy.params.shared_signal)->capture_default_str();
  s->add_option("--out", sy.out, "output directory")->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "paired significance test of two runs");
  c->add_option("--run-a", cmp.run_a)->required();
  c->add_option("--run-b", cmp.run_b)->required();
  c->add_option("--qrels", cmp.qrels)->required();
  c->add_option("--out", cmp.out, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*t) {
      train.epsilon = epsilon;
      train.max_iters = max_iters;
      train.threads = threads;
      return cmd_train(train, out, err);
    }
    if (*ap) return cmd_apply(apply, out, err);
    if (*e) return cmd_eval(ev, out, err);
    if (*f) return cmd_tfidf(tf, out, err);
    if (*s) return cmd_synth(sy, out, err);
    if (*c) return cmd_compare(cmp, out, err);
  } catch (const usage_error& ue) {
    err << "usage error: " << ue.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace genm::cli
