#pragma once

// Corpus preprocessing and the tf-idf cosine constituent ranker.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genm/errors.hpp"
#include "genm/ingest/runs.hpp"

namespace genm {

struct Corpus {
  std::map<std::string, std::vector<std::string>> docs;
  std::map<std::string, std::vector<std::string>> queries;
  std::vector<std::string> vocabulary;  ///< sorted
};

/// (id, raw text) pairs.
using RawTexts = std::vector<std::pair<std::string, std::string>>;

/// Reads "id<TAB>text" lines. Blank lines are skipped.
inline RawTexts read_texts(std::istream& in) {
  RawTexts out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw parse_error(lineno, "expected id<TAB>text");
    std::string id = line.substr(0, tab);
    if (!ids.insert(id).second) throw parse_error(lineno, "duplicate id " + id);
    out.emplace_back(std::move(id), line.substr(tab + 1));
  }
  return out;
}

/// One word per line; lowercased.
inline std::set<std::string> read_stopwords(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string w;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (!w.empty()) out.insert(std::move(w));
  }
  return out;
}

/// Lowercases and splits at every ASCII character that is not a letter or
/// digit (hyphens included). Bytes >= 0x80 stay inside tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Tokenizes, drops stopwords, then drops terms occurring once in the whole
/// document collection (hapax legomena). Queries keep only vocabulary terms.
/// Documents left empty are kept.
inline Corpus preprocess(const RawTexts& docs, const RawTexts& queries, const std::set<std::string>& stopwords) {
  Corpus c;
  std::map<std::string, std::size_t> freq;
  for (const auto& [id, text] : docs) {
    auto& toks = c.docs[id];
    for (auto& t : tokenize(text)) {
      if (stopwords.count(t)) continue;
      ++freq[t];
      toks.push_back(std::move(t));
    }
  }
  for (const auto& [term, n] : freq) {
    if (n >= 2) c.vocabulary.push_back(term);
  }
  if (c.vocabulary.empty()) throw preprocessing_error("vocabulary is empty after preprocessing");
  const std::set<std::string> vocab(c.vocabulary.begin(), c.vocabulary.end());
  for (auto& [id, toks] : c.docs) std::erase_if(toks, [&](const std::string& t) { return !vocab.count(t); });
  for (const auto& [id, text] : queries) {
    auto& toks = c.queries[id];
    for (auto& t : tokenize(text)) {
      if (vocab.count(t)) toks.push_back(std::move(t));
    }
  }
  return c;
}

/// Scores every document against every query with cosine similarity of
/// tf-idf vectors (raw counts, idf = ln(N / df)). Zero scores are omitted;
/// each query's records are ranked by descending score. Queries whose token
/// list is empty get an empty list and a warning.
inline std::map<std::string, std::vector<RunRecord>> tfidf_rank(const Corpus& corpus, const std::string& tag = "tfidf",
                                                                std::vector<std::string>* warnings = nullptr) {
  const double n_docs = static_cast<double>(corpus.docs.size());
  std::map<std::string, double> df;
  for (const auto& [id, toks] : corpus.docs) {
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) df[t] += 1.0;
  }
  auto weigh = [&](const std::vector<std::string>& toks) {
    std::map<std::string, double> v;
    for (const auto& t : toks) {
      if (df.count(t)) v[t] += 1.0;
    }
    for (auto& [t, x] : v) x *= std::log(n_docs / df.at(t));
    return v;
  };
  auto norm = [](const std::map<std::string, double>& v) {
    double s = 0.0;
    for (const auto& [t, x] : v) s += x * x;
    return std::sqrt(s);
  };

  std::vector<std::pair<std::string, std::map<std::string, double>>> doc_vecs;
  std::vector<double> doc_norms;
  for (const auto& [id, toks] : corpus.docs) {
    doc_vecs.emplace_back(id, weigh(toks));
    doc_norms.push_back(norm(doc_vecs.back().second));
  }

  std::map<std::string, std::vector<RunRecord>> out;
  for (const auto& [qid, toks] : corpus.queries) {
    auto& run = out[qid];
    if (toks.empty()) {
      if (warnings) warnings->push_back("query " + qid + " is empty after preprocessing");
      continue;
    }
    const auto q = weigh(toks);
    const double qn = norm(q);
    if (qn == 0.0) continue;
    for (std::size_t d = 0; d < doc_vecs.size(); ++d) {
      if (doc_norms[d] == 0.0) continue;
      double dot = 0.0;
      for (const auto& [t, x] : q) {
        auto it = doc_vecs[d].second.find(t);
        if (it != doc_vecs[d].second.end()) dot += x * it->second;
      }
      const double score = std::clamp(dot / (qn * doc_norms[d]), 0.0, 1.0);
      if (score > 0.0) run.push_back(RunRecord{qid, doc_vecs[d].first, 0, score, tag});
    }
    rerank(run);
  }
  return out;
}

/// Concatenates per-query lists in query-id order.
inline std::vector<RunRecord> flatten(const std::map<std::string, std::vector<RunRecord>>& per_query) {
  std::vector<RunRecord> out;
  for (const auto& [qid, recs] : per_query) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

}  // namespace genm
