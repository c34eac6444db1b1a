#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "genm/cli.hpp"
#include "genm/genm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("genm_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("r1.txt", "q1 Q0 d2 1 0.4 r1\nq1 Q0 d1 2 0.35 r1\nq1 Q0 d3 3 0.25 r1\n");
    write("r2.txt", "q1 Q0 d3 1 0.7 r2\nq1 Q0 d1 2 0.2 r2\nq1 Q0 d2 3 0.1 r2\n");
    write("qrels.txt", "q1 0 d1 0\nq1 0 d2 1\nq1 0 d3 1\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name) << content;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  json read_json(const std::string& name) const { return json::parse(read(name)); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "genm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return genm::cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  void write_weights(const std::string& name, double a, double b) const {
    json j;
    j["format"] = "genm-weights";
    j["version"] = 1;
    j["weights"] = {{"r1", a}, {"r2", b}};
    write(name, j.dump());
  }

  std::vector<std::string> doc_order(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& r : genm::parse_run(read(name))) out.push_back(r.doc_id);
    return out;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

json without_manifest(json j) {
  j.erase("manifest");
  return j;
}

}  // namespace

TEST_F(Cli, TrainBatchOnToy) {
  ASSERT_EQ(run({"train", "--mode", "batch", "--runs", path("r1.txt"), path("r2.txt"), "--qrels", path("qrels.txt"),
                 "--out", path("w.json")}),
            0)
      << err_.str();
  const auto j = read_json("w.json");
  EXPECT_EQ(j["format"], "genm-weights");
  EXPECT_EQ(j["final_map"].get<double>(), 1.0);
  EXPECT_EQ(j["per_start"].size(), 4U);
  EXPECT_GE(j["weights"]["r1"].get<double>(), 0.0);
  EXPECT_EQ(j["manifest"]["command"], "train");
  EXPECT_EQ(j["manifest"]["config"]["beta"], 200.0);
}

TEST_F(Cli, ApplyOrders) {
  write_weights("w.json", 0.7, 0.3);
  ASSERT_EQ(run({"apply", "--runs", path("r1.txt"), path("r2.txt"), "--weights", path("w.json"), "--out",
                 path("fused.txt")}),
            0)
      << err_.str();
  EXPECT_EQ(doc_order("fused.txt"), (std::vector<std::string>{"d3", "d2", "d1"}));
  const auto recs = genm::parse_run(read("fused.txt"));
  EXPECT_EQ(recs[0].tag, "gEnM");
  EXPECT_EQ(recs[0].rank, 1);
  EXPECT_EQ(recs[2].rank, 3);

  write_weights("w10.json", 1, 0);
  ASSERT_EQ(run({"apply", "--runs", path("r2.txt"), path("r1.txt"), "--weights", path("w10.json"), "--out",
                 path("f10.txt")}),
            0);
  EXPECT_EQ(doc_order("f10.txt"), doc_order("r1.txt"));

  write_weights("w00.json", 0, 0);
  ASSERT_EQ(run({"apply", "--runs", path("r1.txt"), path("r2.txt"), "--weights", path("w00.json"), "--out",
                 path("f00.txt")}),
            0);
  EXPECT_EQ(doc_order("f00.txt"), (std::vector<std::string>{"d1", "d2", "d3"}));
}

TEST_F(Cli, ApplyTagMismatch) {
  write("r3.txt", "q1 Q0 d1 1 0.5 r3\n");
  write_weights("w.json", 0.7, 0.3);
  EXPECT_EQ(run({"apply", "--runs", path("r1.txt"), path("r3.txt"), "--weights", path("w.json"), "--out",
                 path("fused.txt")}),
            1);
  EXPECT_NE(err_.str().find("r2"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("fused.txt")));
}

TEST_F(Cli, EvalToy) {
  write_weights("w.json", 0.7, 0.3);
  ASSERT_EQ(run({"apply", "--runs", path("r1.txt"), path("r2.txt"), "--weights", path("w.json"), "--out",
                 path("fused.txt")}),
            0);
  ASSERT_EQ(run({"eval", "--run", path("fused.txt"), "--qrels", path("qrels.txt"), "--out", path("rep.json"),
                 "--pr-csv", path("pr.csv"), "--per-query"}),
            0)
      << err_.str();
  const auto j = read_json("rep.json");
  EXPECT_EQ(j["metrics"]["map"].get<double>(), 1.0);
  EXPECT_EQ(j["metrics"]["p@1"].get<double>(), 1.0);
  EXPECT_EQ(j["metrics"]["p@5"].get<double>(), 0.4);
  EXPECT_EQ(j["per_query_ap"]["q1"].get<double>(), 1.0);
  const auto csv = read("pr.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "recall,precision");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
}

TEST_F(Cli, EvalMetricSelection) {
  ASSERT_EQ(run({"eval", "--run", path("r1.txt"), "--qrels", path("qrels.txt"), "--metrics", "map", "--out",
                 path("rep.json")}),
            0);
  const auto j = read_json("rep.json");
  EXPECT_EQ(j["metrics"].size(), 1U);
  EXPECT_TRUE(j["metrics"].contains("map"));
  EXPECT_FALSE(j.contains("per_query_ap"));
  EXPECT_EQ(run({"eval", "--run", path("r1.txt"), "--qrels", path("qrels.txt"), "--metrics", "ndcg", "--out",
                 path("bad.json")}),
            2);
  EXPECT_FALSE(fs::exists(path("bad.json")));
}

TEST_F(Cli, EvalDisjointQrels) {
  write("other.txt", "q7 0 d1 1\n");
  EXPECT_EQ(run({"eval", "--run", path("r1.txt"), "--qrels", path("other.txt"), "--out", path("rep.json")}), 1);
  EXPECT_FALSE(fs::exists(path("rep.json")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"train", "--mode", "unsup", "--runs", path("r1.txt"), path("r2.txt"), "--qrels", path("qrels.txt"),
                 "--out", path("w.json")}),
            2);
  EXPECT_EQ(run({"train", "--mode", "batch", "--runs", path("r1.txt"), "--out", path("w.json")}), 2);
  EXPECT_EQ(run({"train", "--mode", "sideways", "--runs", path("r1.txt"), "--qrels", path("qrels.txt"), "--out",
                 path("w.json")}),
            2);
  EXPECT_EQ(run({"train", "--mode", "batch", "--runs", path("r1.txt"), path("r2.txt"), "--qrels", path("qrels.txt"),
                 "--folds", "3", "--out", path("w.json")}),
            2);
  EXPECT_EQ(run({"train", "--mode", "batch", "--runs", path("r1.txt"), path("r2.txt"), "--qrels", path("qrels.txt"),
                 "--starts", "random:0", "--out", path("w.json")}),
            2);
  EXPECT_EQ(run({"train", "--mode", "batch", "--runs", path("r1.txt"), path("r2.txt"), "--qrels", path("qrels.txt"),
                 "--beta", "-1", "--out", path("w.json")}),
            2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"synth", "--docs", "5", "--relevant", "5", "--out", path("syn")}), 2);
  EXPECT_FALSE(fs::exists(path("w.json")));
  EXPECT_FALSE(fs::exists(path("syn")));
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, MissingInputIsRuntimeError) {
  EXPECT_EQ(run({"train", "--mode", "batch", "--runs", path("nope.txt"), "--qrels", path("qrels.txt"), "--out",
                 path("w.json")}),
            1);
  write("broken.txt", "q1 Q0 d1 one 0.5 r1\n");
  EXPECT_EQ(run({"eval", "--run", path("broken.txt"), "--qrels", path("qrels.txt"), "--out", path("rep.json")}), 1);
  EXPECT_NE(err_.str().find("line 1"), std::string::npos);
}

TEST_F(Cli, TrainApplyEvalConsistent) {
  ASSERT_EQ(run({"synth", "--queries", "12", "--docs", "30", "--relevant", "4", "--seed", "5", "--out", path("syn")}),
            0);
  const auto runs = {path("syn/run_r1.txt"), path("syn/run_r2.txt"), path("syn/run_r3.txt")};
  for (const std::string mode : {"batch", "online"}) {
    std::vector<std::string> train{"train", "--mode", mode, "--runs"};
    train.insert(train.end(), runs.begin(), runs.end());
    train.insert(train.end(), {"--qrels", path("syn/qrels.txt"), "--out", path(mode + ".json")});
    ASSERT_EQ(run(train), 0) << err_.str();
    std::vector<std::string> apply{"apply", "--runs"};
    apply.insert(apply.end(), runs.begin(), runs.end());
    apply.insert(apply.end(), {"--weights", path(mode + ".json"), "--out", path(mode + ".run")});
    ASSERT_EQ(run(apply), 0) << err_.str();
    ASSERT_EQ(run({"eval", "--run", path(mode + ".run"), "--qrels", path("syn/qrels.txt"), "--metrics", "map", "--out",
                   path(mode + ".eval.json")}),
              0);
    EXPECT_EQ(read_json(mode + ".eval.json")["metrics"]["map"].get<double>(),
              read_json(mode + ".json")["final_map"].get<double>())
        << mode;
  }
}

TEST_F(Cli, TrainDeterministic) {
  ASSERT_EQ(run({"synth", "--queries", "8", "--docs", "20", "--relevant", "3", "--out", path("syn")}), 0);
  for (const auto* name : {"a.json", "b.json"}) {
    ASSERT_EQ(run({"train", "--mode", "batch", "--runs", path("syn/run_r1.txt"), path("syn/run_r2.txt"),
                   path("syn/run_r3.txt"), "--qrels", path("syn/qrels.txt"), "--starts", "random:3", "--seed", "4",
                   "--folds", "2", "--out", path(name)}),
              0)
        << err_.str();
  }
  EXPECT_EQ(without_manifest(read_json("a.json")), without_manifest(read_json("b.json")));
  EXPECT_EQ(without_manifest(read_json("a.json.cv.json")), without_manifest(read_json("b.json.cv.json")));
  EXPECT_EQ(read_json("a.json")["per_start"].size(), 3U);
}

TEST_F(Cli, TrainUnsup) {
  ASSERT_EQ(run({"synth", "--queries", "6", "--docs", "20", "--relevant", "3", "--out", path("syn")}), 0);
  ASSERT_EQ(run({"train", "--mode", "unsup", "--runs", path("syn/run_r1.txt"), path("syn/run_r2.txt"),
                 path("syn/run_r3.txt"), "--max-iters", "5", "--out", path("u.json")}),
            0)
      << err_.str();
  const auto j = read_json("u.json");
  EXPECT_EQ(j["mode"], "unsup");
  EXPECT_EQ(j["weights"].size(), 3U);
  EXPECT_EQ(run({"train", "--mode", "unsup", "--runs", path("syn/run_r1.txt"), path("syn/run_r2.txt"),
                 "--score-threshold", "50", "--out", path("v.json")}),
            1);
}

TEST_F(Cli, SynthDeterministic) {
  ASSERT_EQ(run({"synth", "--queries", "5", "--docs", "15", "--relevant", "2", "--seed", "7", "--out", path("a")}), 0);
  ASSERT_EQ(run({"synth", "--queries", "5", "--docs", "15", "--relevant", "2", "--seed", "7", "--out", path("b")}), 0);
  for (const auto* f : {"run_r1.txt", "run_r2.txt", "run_r3.txt", "qrels.txt", "planted.json"}) {
    EXPECT_EQ(read(std::string("a/") + f), read(std::string("b/") + f)) << f;
  }
}

TEST_F(Cli, CompareIdenticalRuns) {
  ASSERT_EQ(run({"compare", "--run-a", path("r1.txt"), "--run-b", path("r1.txt"), "--qrels", path("qrels.txt"),
                 "--out", path("cmp.json")}),
            0)
      << err_.str();
  const auto j = read_json("cmp.json");
  EXPECT_TRUE(j["wilcoxon"]["insufficient_data"].get<bool>());
  EXPECT_EQ(j["map_a"], j["map_b"]);
}

TEST_F(Cli, Tfidf) {
  write("docs.txt", "d1\tapple banana apple\nd2\tbanana cherry\nd3\tcherry apple\n");
  write("queries.txt", "q1\tapple\nq2\tdurian\n");
  write("stop.txt", "the\n");
  ASSERT_EQ(run({"tfidf", "--corpus", path("docs.txt"), "--queries", path("queries.txt"), "--stopwords",
                 path("stop.txt"), "--out", path("tfidf.txt"), "--tag", "tf"}),
            0)
      << err_.str();
  const auto recs = genm::parse_run(read("tfidf.txt"));
  ASSERT_EQ(recs.size(), 2U);
  EXPECT_EQ(recs[0].tag, "tf");
  EXPECT_EQ(recs[0].query_id, "q1");
  EXPECT_GT(recs[0].score, recs[1].score);
}
