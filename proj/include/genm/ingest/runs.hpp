#pragma once

// Run files ("qid Q0 docid rank score tag") and qrels ("qid iter docid rel"),
// and assembly of per-ranker runs into a Dataset.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "genm/core_model.hpp"
#include "genm/errors.hpp"

namespace genm {

struct RunRecord {
  std::string query_id;
  std::string doc_id;
  long rank = 0;
  double score = 0.0;
  std::string tag;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct QrelRecord {
  std::string query_id;
  std::string doc_id;
  long relevance = 0;

  bool relevant() const noexcept { return relevance > 0; }
  friend bool operator==(const QrelRecord&, const QrelRecord&) = default;
};

/// All records of one constituent ranker.
struct RankerRun {
  std::string tag;
  std::vector<RunRecord> records;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool skippable(const std::vector<std::string_view>& fields) {
  return fields.empty() || fields.front().front() == '#';
}

template <class T>
T parse_number(std::string_view text, std::size_t line, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw parse_error(line, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses a run file. Blank lines and lines starting with '#' are skipped.
inline std::vector<RunRecord> parse_run(std::istream& in) {
  std::vector<RunRecord> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (detail::skippable(f)) continue;
    if (f.size() != 6) {
      throw parse_error(lineno, "expected 6 fields (qid Q0 docid rank score tag), got " + std::to_string(f.size()));
    }
    if (f[1] != "Q0") throw parse_error(lineno, "second field must be Q0");
    RunRecord r;
    r.query_id = std::string(f[0]);
    r.doc_id = std::string(f[2]);
    r.rank = detail::parse_number<long>(f[3], lineno, "rank");
    r.score = detail::parse_number<double>(f[4], lineno, "score");
    if (!std::isfinite(r.score)) throw parse_error(lineno, "non-finite score");
    r.tag = std::string(f[5]);
    auto [it, fresh] = seen.emplace(std::make_pair(r.query_id, r.doc_id), lineno);
    if (!fresh) {
      throw duplicate_error(it->second, lineno, "duplicate entry for query " + r.query_id + ", document " + r.doc_id);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<RunRecord> parse_run(const std::string& text) {
  std::istringstream in(text);
  return parse_run(in);
}

inline std::vector<QrelRecord> parse_qrels(std::istream& in) {
  std::vector<QrelRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (detail::skippable(f)) continue;
    if (f.size() != 4) {
      throw parse_error(lineno, "expected 4 fields (qid iter docid rel), got " + std::to_string(f.size()));
    }
    QrelRecord q;
    q.query_id = std::string(f[0]);
    q.doc_id = std::string(f[2]);
    q.relevance = detail::parse_number<long>(f[3], lineno, "relevance");
    if (q.relevance < 0) throw parse_error(lineno, "negative relevance");
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<QrelRecord> parse_qrels(const std::string& text) {
  std::istringstream in(text);
  return parse_qrels(in);
}

inline void serialize_run(std::ostream& out, const std::vector<RunRecord>& records) {
  for (const auto& r : records) {
    out << r.query_id << " Q0 " << r.doc_id << ' ' << r.rank << ' ' << detail::format_double(r.score) << ' ' << r.tag
        << '\n';
  }
}

inline void serialize_qrels(std::ostream& out, const std::vector<QrelRecord>& records) {
  for (const auto& q : records) out << q.query_id << " 0 " << q.doc_id << ' ' << q.relevance << '\n';
}

/// Groups records under their common tag. All records must share one tag.
inline RankerRun ranker_run(std::vector<RunRecord> records) {
  if (records.empty()) throw invalid_argument("empty run: cannot determine its ranker tag");
  RankerRun run{records.front().tag, {}};
  for (const auto& r : records) {
    if (r.tag != run.tag) throw invalid_argument("run mixes tags " + run.tag + " and " + r.tag);
  }
  run.records = std::move(records);
  return run;
}

/// Sorts `records` of one query list by descending score (ties by ascending
/// doc id) and renumbers ranks from 1.
inline void rerank(std::vector<RunRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  std::string current;
  long rank = 0;
  for (auto& r : records) {
    if (r.query_id != current) {
      current = r.query_id;
      rank = 0;
    }
    r.rank = ++rank;
  }
}

namespace detail {

struct PanelBuilder {
  std::set<std::string> docs;
  std::map<std::pair<std::string, std::size_t>, double> scores;  // (doc, ranker) -> score
};

inline std::map<std::string, PanelBuilder> collect_runs(const std::vector<RankerRun>& runs) {
  std::set<std::string> tags;
  for (const auto& run : runs) {
    if (!tags.insert(run.tag).second) throw invalid_argument("duplicate ranker tag " + run.tag);
  }
  std::map<std::string, PanelBuilder> out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (const auto& r : runs[k].records) {
      auto& b = out[r.query_id];
      b.docs.insert(r.doc_id);
      if (!b.scores.emplace(std::make_pair(r.doc_id, k), r.score).second) {
        throw invalid_argument("ranker " + runs[k].tag + " scores " + r.doc_id + " twice for query " + r.query_id);
      }
    }
  }
  return out;
}

inline ScorePanel build_panel(const std::string& qid, const PanelBuilder& b, std::size_t rankers) {
  std::vector<std::string> docs(b.docs.begin(), b.docs.end());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(rankers));
  for (std::size_t r = 0; r < docs.size(); ++r) {
    for (std::size_t k = 0; k < rankers; ++k) {
      auto it = b.scores.find({docs[r], k});
      if (it != b.scores.end()) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = it->second;
    }
  }
  return ScorePanel(qid, std::move(docs), std::move(m));
}

inline std::vector<std::string> tags_of(const std::vector<RankerRun>& runs) {
  std::vector<std::string> tags;
  for (const auto& r : runs) tags.push_back(r.tag);
  return tags;
}

}  // namespace detail

/// Builds a labelled dataset. Per query the document universe is every
/// document scored by some ranker plus the judged-relevant documents; missing
/// scores are 0. Queries (sorted by id) without run lines or without relevant
/// documents are dropped, each with a message appended to `warnings`.
inline Dataset assemble_dataset(const std::vector<RankerRun>& runs, const std::vector<QrelRecord>& qrels,
                                std::vector<std::string>* warnings = nullptr) {
  if (runs.empty()) throw invalid_argument("need at least one run");
  auto builders = detail::collect_runs(runs);
  std::map<std::string, std::set<std::string>> relevant;
  std::set<std::string> judged;
  for (const auto& q : qrels) {
    judged.insert(q.query_id);
    if (q.relevant()) relevant[q.query_id].insert(q.doc_id);
  }
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  for (const auto& qid : judged) {
    if (!builders.count(qid)) warn("query " + qid + " has judgements but no run lines; dropped");
  }

  std::vector<ScorePanel> panels;
  std::vector<RelevanceSet> rels;
  for (auto& [qid, b] : builders) {
    auto it = relevant.find(qid);
    if (it == relevant.end() || it->second.empty()) {
      warn("query " + qid + " has no relevant documents; dropped");
      continue;
    }
    for (const auto& d : it->second) b.docs.insert(d);
    panels.push_back(detail::build_panel(qid, b, runs.size()));
    rels.push_back(RelevanceSet{qid, it->second});
  }
  if (panels.empty()) throw empty_dataset_error("no query has both run lines and relevant documents");
  return Dataset(std::move(panels), std::move(rels), detail::tags_of(runs));
}

/// Dataset without judgements (empty relevance sets), one panel per run query.
inline Dataset assemble_unlabelled(const std::vector<RankerRun>& runs) {
  if (runs.empty()) throw invalid_argument("need at least one run");
  const auto builders = detail::collect_runs(runs);
  std::vector<ScorePanel> panels;
  std::vector<RelevanceSet> rels;
  for (const auto& [qid, b] : builders) {
    panels.push_back(detail::build_panel(qid, b, runs.size()));
    rels.push_back(RelevanceSet{qid, {}});
  }
  if (panels.empty()) throw empty_dataset_error("runs contain no queries");
  return Dataset(std::move(panels), std::move(rels), detail::tags_of(runs));
}

}  // namespace genm
