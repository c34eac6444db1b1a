#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"

using genm::Weights;

namespace {

std::string run_text(const std::vector<genm::RunRecord>& recs) {
  std::ostringstream out;
  genm::serialize_run(out, recs);
  return out.str();
}

/// The toy dataset as two run files and a qrels file.
std::vector<genm::RankerRun> toy_runs() {
  return {genm::ranker_run(genm::parse_run("q1 Q0 d2 1 0.4 r1\nq1 Q0 d1 2 0.35 r1\nq1 Q0 d3 3 0.25 r1\n")),
          genm::ranker_run(genm::parse_run("q1 Q0 d3 1 0.7 r2\nq1 Q0 d1 2 0.2 r2\nq1 Q0 d2 3 0.1 r2\n"))};
}

}  // namespace

TEST(ParseRun, Record) {
  const auto r = genm::parse_run("q1 Q0 d3 1 0.385 ens2\n");
  ASSERT_EQ(r.size(), 1U);
  EXPECT_EQ(r[0], (genm::RunRecord{"q1", "d3", 1, 0.385, "ens2"}));
}

TEST(ParseRun, EmptyAndComments) {
  EXPECT_TRUE(genm::parse_run("").empty());
  EXPECT_EQ(genm::parse_run("# header\n\n  \nq1 Q0 d1 1 0.5 a\n").size(), 1U);
}

TEST(ParseRun, Errors) {
  try {
    genm::parse_run("q1 Q0 d3 1 abc ens2\n");
    FAIL() << "expected parse_error";
  } catch (const genm::parse_error& e) {
    EXPECT_EQ(e.line(), 1U);
  }
  EXPECT_THROW(genm::parse_run("q1 Q0 d3 1 0.3\n"), genm::parse_error);
  EXPECT_THROW(genm::parse_run("q1 X d3 1 0.3 t\n"), genm::parse_error);
  EXPECT_THROW(genm::parse_run("q1 Q0 d3 1 nan t\n"), genm::parse_error);
  try {
    genm::parse_run("q1 Q0 d3 1 0.3 t\nq1 Q0 d4 2 0.2 t\nq1 Q0 d3 3 0.1 t\n");
    FAIL() << "expected duplicate_error";
  } catch (const genm::duplicate_error& e) {
    EXPECT_EQ(e.first_line(), 1U);
    EXPECT_EQ(e.second_line(), 3U);
  }
}

TEST(ParseRun, RoundTrip) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<genm::RunRecord> recs;
  for (int q = 0; q < 5; ++q) {
    for (int d = 0; d < 20; ++d) recs.push_back({fixtures::id('q', q), fixtures::id('d', d), d + 1, u(rng), "tag"});
  }
  recs.push_back({"q9", "d0", 1, 1e-300, "tag"});
  recs.push_back({"q9", "d1", 2, 0.1 + 0.2, "tag"});
  EXPECT_EQ(genm::parse_run(run_text(recs)), recs);
}

TEST(ParseQrels, Records) {
  const auto q = genm::parse_qrels("q1 0 d2 1\nq1 0 d5 0\n");
  ASSERT_EQ(q.size(), 2U);
  EXPECT_EQ(q[0], (genm::QrelRecord{"q1", "d2", 1}));
  EXPECT_FALSE(q[1].relevant());
  EXPECT_THROW(genm::parse_qrels("q1 0 d2\n"), genm::parse_error);
  EXPECT_THROW(genm::parse_qrels("q1 0 d2 x\n"), genm::parse_error);
  std::ostringstream out;
  genm::serialize_qrels(out, q);
  EXPECT_EQ(genm::parse_qrels(out.str()), q);
}

TEST(Assemble, Toy) {
  const auto d = genm::assemble_dataset(toy_runs(), genm::parse_qrels("q1 0 d2 1\nq1 0 d3 1\nq1 0 d1 0\n"));
  ASSERT_EQ(d.num_queries(), 1U);
  EXPECT_EQ(d.panel(0).scores(), fixtures::toy().panel(0).scores());
  EXPECT_EQ(d.panel(0).doc_ids(), fixtures::toy().panel(0).doc_ids());
  EXPECT_EQ(d.ranker_tags(), (std::vector<std::string>{"r1", "r2"}));
  EXPECT_DOUBLE_EQ(genm::map_exact(d, (Weights(2) << 0.7, 0.3).finished()), 1.0);
}

TEST(Assemble, UnionAndZeroFill) {
  std::vector<genm::RankerRun> runs{genm::ranker_run(genm::parse_run("q1 Q0 d1 1 0.9 A\n")),
                                    genm::ranker_run(genm::parse_run("q1 Q0 d2 1 0.8 B\n"))};
  const auto d = genm::assemble_dataset(runs, genm::parse_qrels("q1 0 d1 1\n"));
  const auto& p = d.panel(0);
  EXPECT_EQ(p.doc_ids(), (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(p.scores()(1, 0), 0.0);
  EXPECT_EQ(p.scores()(0, 1), 0.0);
  EXPECT_EQ(p.scores()(0, 0), 0.9);
}

TEST(Assemble, RelevantButUnscoredJoinsUniverse) {
  std::vector<genm::RankerRun> runs{genm::ranker_run(genm::parse_run("q1 Q0 d1 1 0.9 A\n"))};
  const auto d = genm::assemble_dataset(runs, genm::parse_qrels("q1 0 d7 1\n"));
  EXPECT_EQ(d.panel(0).doc_ids(), (std::vector<std::string>{"d1", "d7"}));
  EXPECT_DOUBLE_EQ(genm::map_exact(d, Weights::Ones(1)), 0.5);
}

TEST(Assemble, DropsWithWarnings) {
  std::vector<genm::RankerRun> runs{genm::ranker_run(genm::parse_run("q1 Q0 d1 1 0.9 A\nq2 Q0 d1 1 0.9 A\n"))};
  std::vector<std::string> warnings;
  const auto d = genm::assemble_dataset(runs, genm::parse_qrels("q1 0 d1 1\nq2 0 d1 0\nq3 0 d1 1\n"), &warnings);
  EXPECT_EQ(d.num_queries(), 1U);
  EXPECT_EQ(warnings.size(), 2U);
  EXPECT_THROW(genm::assemble_dataset(runs, genm::parse_qrels("q3 0 d1 1\n")), genm::empty_dataset_error);
}

TEST(Assemble, DuplicateTagRejected) {
  std::vector<genm::RankerRun> runs{genm::ranker_run(genm::parse_run("q1 Q0 d1 1 0.9 A\n")),
                                    genm::ranker_run(genm::parse_run("q1 Q0 d2 1 0.9 A\n"))};
  EXPECT_THROW(genm::assemble_dataset(runs, genm::parse_qrels("q1 0 d1 1\n")), genm::invalid_argument);
  EXPECT_THROW(genm::ranker_run(genm::parse_run("q1 Q0 d1 1 0.9 A\nq1 Q0 d2 2 0.5 B\n")), genm::invalid_argument);
}

TEST(Assemble, Unlabelled) {
  const auto d = genm::assemble_unlabelled(toy_runs());
  EXPECT_EQ(d.num_queries(), 1U);
  EXPECT_TRUE(d.relevance(0).relevant_docs.empty());
}

TEST(Rerank, OrdersAndRenumbers) {
  std::vector<genm::RunRecord> recs{{"q2", "a", 9, 0.1, "t"}, {"q1", "b", 9, 0.5, "t"}, {"q1", "a", 9, 0.5, "t"},
                                    {"q1", "c", 9, 0.7, "t"}};
  genm::rerank(recs);
  EXPECT_EQ(recs[0], (genm::RunRecord{"q1", "c", 1, 0.7, "t"}));
  EXPECT_EQ(recs[1], (genm::RunRecord{"q1", "a", 2, 0.5, "t"}));
  EXPECT_EQ(recs[2], (genm::RunRecord{"q1", "b", 3, 0.5, "t"}));
  EXPECT_EQ(recs[3], (genm::RunRecord{"q2", "a", 1, 0.1, "t"}));
}

TEST(Tokenize, SplitsOnSymbols) {
  EXPECT_EQ(genm::tokenize("Heart-attack risk!"), (std::vector<std::string>{"heart", "attack", "risk"}));
  EXPECT_TRUE(genm::tokenize("--- ...").empty());
}

TEST(Preprocess, StopwordsAndHapax) {
  const genm::RawTexts docs{{"d1", "Heart-attack risk"}, {"d2", "heart attack"}, {"d3", "the lonely heart"},
                            {"d4", "the the"}};
  const genm::RawTexts queries{{"q1", "heart risk unknownword"}};
  const auto c = genm::preprocess(docs, queries, {"risk", "the"});
  EXPECT_EQ(c.docs.at("d1"), (std::vector<std::string>{"heart", "attack"}));
  EXPECT_EQ(c.vocabulary, (std::vector<std::string>{"attack", "heart"}));
  EXPECT_EQ(c.docs.at("d3"), (std::vector<std::string>{"heart"}));
  EXPECT_TRUE(c.docs.at("d4").empty());
  EXPECT_EQ(c.queries.at("q1"), (std::vector<std::string>{"heart"}));
}

TEST(Preprocess, EmptyVocabulary) {
  EXPECT_THROW(genm::preprocess({{"d1", "alpha beta"}}, {}, {}), genm::preprocessing_error);
}

TEST(ReadTexts, Format) {
  std::istringstream in("d1\tsome text\n\nd2\tmore\r\n");
  const auto t = genm::read_texts(in);
  ASSERT_EQ(t.size(), 2U);
  EXPECT_EQ(t[1], (std::pair<std::string, std::string>{"d2", "more"}));
  std::istringstream bad("no tab here\n");
  EXPECT_THROW(genm::read_texts(bad), genm::parse_error);
  std::istringstream dup("a\tx\na\ty\n");
  EXPECT_THROW(genm::read_texts(dup), genm::parse_error);
}

TEST(Tfidf, MatchesLongDoubleOracle) {
  const genm::RawTexts docs{{"d1", "apple banana apple cherry"},
                            {"d2", "banana cherry cherry date"},
                            {"d3", "apple date date date banana"},
                            {"d4", "fig fig"}};
  const genm::RawTexts queries{{"q1", "apple cherry"}, {"q2", "date banana banana"}, {"q3", "fig"}};
  const auto c = genm::preprocess(docs, queries, {});
  const auto runs = genm::tfidf_rank(c);
  for (const auto& [qid, toks] : c.queries) {
    const auto want = oracle::tfidf_scores(c.docs, toks);
    std::size_t nonzero = 0;
    for (const auto& [d, s] : want) {
      if (s > 0) ++nonzero;
    }
    const auto& got = runs.at(qid);
    EXPECT_EQ(got.size(), nonzero);
    for (const auto& r : got) {
      EXPECT_NEAR(r.score, static_cast<double>(want.at(r.doc_id)), 1e-10);
      EXPECT_GE(r.score, 0.0);
      EXPECT_LE(r.score, 1.0);
    }
  }
  // fig occurs only in d4.
  ASSERT_EQ(runs.at("q3").size(), 1U);
  EXPECT_DOUBLE_EQ(runs.at("q3")[0].score, 1.0);
}

TEST(Tfidf, IdenticalQueryScoresOne) {
  const genm::RawTexts docs{{"d1", "red green red"}, {"d2", "blue yellow"}, {"d3", "blue yellow"},
                            {"d4", "green red"}, {"d5", "cyan magenta cyan magenta"}};
  const auto c = genm::preprocess(docs, {{"q", "cyan magenta cyan magenta"}}, {});
  const auto runs = genm::tfidf_rank(c);
  ASSERT_EQ(runs.at("q").size(), 1U);
  EXPECT_EQ(runs.at("q")[0].doc_id, "d5");
  EXPECT_NEAR(runs.at("q")[0].score, 1.0, 1e-15);
}

TEST(Tfidf, SymmetricUnderSwap) {
  // Queries equal to documents a and b: score(a-query, b) must equal score(b-query, a).
  const genm::RawTexts docs{{"a", "x y y z"}, {"b", "x z z w"}, {"c", "y w"}, {"d", "w x"}};
  const auto c = genm::preprocess(docs, {{"qa", "x y y z"}, {"qb", "x z z w"}}, {});
  const auto runs = genm::tfidf_rank(c);
  auto score = [&](const std::string& q, const std::string& d) {
    for (const auto& r : runs.at(q)) {
      if (r.doc_id == d) return r.score;
    }
    return 0.0;
  };
  EXPECT_GT(score("qa", "b"), 0.0);
  EXPECT_NEAR(score("qa", "b"), score("qb", "a"), 1e-15);
}

TEST(Tfidf, EmptyQueryWarns) {
  const auto c = genm::preprocess({{"d1", "one two"}, {"d2", "one two"}}, {{"q", "zzz"}}, {});
  std::vector<std::string> warnings;
  const auto runs = genm::tfidf_rank(c, "tfidf", &warnings);
  EXPECT_TRUE(runs.at("q").empty());
  EXPECT_EQ(warnings.size(), 1U);
}

TEST(Synth, NoiselessPlantedIsPerfect) {
  genm::SynthParams p;
  p.noise = 0.0;
  p.queries = 10;
  p.seed = 3;
  const auto r = genm::synth_generate(p);
  EXPECT_DOUBLE_EQ(genm::map_exact(r.dataset, r.planted), 1.0);
  EXPECT_TRUE((r.planted.array() >= 0.0).all());
}

TEST(Synth, Deterministic) {
  genm::SynthParams p;
  p.queries = 5;
  p.seed = 9;
  const auto a = genm::synth_generate(p);
  const auto b = genm::synth_generate(p);
  ASSERT_EQ(a.dataset.num_queries(), b.dataset.num_queries());
  for (std::size_t q = 0; q < a.dataset.num_queries(); ++q) {
    EXPECT_EQ(a.dataset.panel(q).scores(), b.dataset.panel(q).scores());
    EXPECT_EQ(a.dataset.relevance(q).relevant_docs, b.dataset.relevance(q).relevant_docs);
  }
  EXPECT_EQ(a.planted, b.planted);
}

TEST(Synth, PlantedBeatsSingles) {
  genm::SynthParams p;
  p.seed = 1;
  const auto r = genm::synth_generate(p);
  EXPECT_TRUE(r.advantage_verified);
  const double planted = genm::map_exact(r.dataset, r.planted);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_GT(planted, genm::map_exact(r.dataset, Weights::Unit(3, k)));
}

TEST(Synth, NoiseRankerHasZeroPlantedWeight) {
  genm::SynthParams p;
  p.queries = 5;
  p.noise_rankers = {0};
  p.shared_signal = 0.7;
  const auto r = genm::synth_generate(p);
  EXPECT_EQ(r.planted[0], 0.0);
  EXPECT_GT(r.planted[1], 0.0);
}

TEST(Synth, InvalidParameters) {
  genm::SynthParams p;
  p.relevant = p.docs;
  EXPECT_THROW(genm::synth_generate(p), genm::invalid_argument);
  p = {};
  p.rankers = 1;
  EXPECT_THROW(genm::synth_generate(p), genm::invalid_argument);
  p = {};
  p.noise_rankers = {0, 1, 2};
  EXPECT_THROW(genm::synth_generate(p), genm::invalid_argument);
}

TEST(Synth, RunsReassembleToSameDataset) {
  genm::SynthParams p;
  p.queries = 4;
  p.docs = 12;
  p.relevant = 3;
  const auto r = genm::synth_generate(p);
  std::vector<genm::RankerRun> runs;
  for (const auto& run : genm::synth_runs(r.dataset)) {
    runs.push_back(genm::ranker_run(genm::parse_run(run_text(run.records))));
  }
  const auto back = genm::assemble_dataset(runs, genm::synth_qrels(r.dataset));
  ASSERT_EQ(back.num_queries(), r.dataset.num_queries());
  for (std::size_t q = 0; q < back.num_queries(); ++q) {
    EXPECT_EQ(back.panel(q).doc_ids(), r.dataset.panel(q).doc_ids());
    EXPECT_EQ(back.panel(q).scores(), r.dataset.panel(q).scores());
  }
}
