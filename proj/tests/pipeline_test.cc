/*
 * Copyright 2026 The Trail Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "trail/pipeline.h"

#include <gtest/gtest.h>

#include <filesystem>
#include "json.hpp"
#include <sstream>

#include "test_util.h"
#include "trail/common.h"
#include "trail/ingest.h"
#include "trail/scoring.h"

namespace trail::pipeline {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "trail");
  std::ostringstream out, err;
  const int code = RunCli(args, out, err, [](const std::string&) {
    return std::optional<std::string>();
  });
  return {code, out.str(), err.str()};
}

// One small synthetic corpus shared by the suite.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_ = new testing_util::TempDir();
    const auto r = Cli({"synth", "--dir", corpus_->Path(), "--items", "30",
                        "--windows", "8", "--users", "200", "--planted", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete corpus_; }

  static std::vector<std::string> Base(const std::string& out) {
    return {"--set", "interactions=" + corpus_->Path("interactions.jsonl"),
            "--set", "metadata=" + corpus_->Path("metadata.jsonl"),
            "--set", "epochs=3", "--set", "hidden_dim=32", "--set", "out_dim=16",
            "--out", out};
  }

  static CliResult Stage(const std::string& stage, const std::string& out,
                         std::vector<std::string> extra = {}) {
    auto args = Base(out);
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back(stage);
    return Cli(args);
  }

  // ingest followed by split.
  static bool Prepare(const std::string& out) {
    return Stage("ingest", out).code == 0 && Stage("split", out).code == 0;
  }

  static testing_util::TempDir* corpus_;
};

testing_util::TempDir* PipelineTest::corpus_ = nullptr;

TEST_F(PipelineTest, RunAllWritesEveryArtifact) {
  testing_util::TempDir out;
  const auto r = Stage("run-all", out.Path());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {files::kSeries, files::kMetadata, files::kUserItemWindows,
                        files::kIngestSummary, files::kSamplesTrain, files::kSamplesVal,
                        files::kSamplesTest, files::kSplit, files::kItemEmbeddings,
                        files::kSimilarity, files::kTriplets, files::kHead,
                        files::kLossTrace, files::kTrainSummary, files::kScores,
                        files::kRanked, files::kPredictions, files::kMetrics}) {
    EXPECT_TRUE(fs::exists(out.Path(f))) << f;
  }
  for (const auto& stage : StageNames()) {
    EXPECT_TRUE(fs::exists(out.Path("config." + stage + ".txt"))) << stage;
  }
  EXPECT_NE(r.err.find("fnv1a64="), std::string::npos);
  const auto j = nlohmann::json::parse(ReadTextFile(out.Path(files::kMetrics)));
  EXPECT_TRUE(j.contains("hr") && j.contains("ndcg") && j.contains("jaccard"));
  EXPECT_EQ(j.at("items"), 30);
}

TEST_F(PipelineTest, ConfigErrorExitsTwoNamingKey) {
  testing_util::TempDir out;
  ASSERT_TRUE(Prepare(out.Path()));
  const auto r = Stage("mine", out.Path(), {"--set", "n_pos=0"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("n_pos"), std::string::npos) << r.err;
  EXPECT_EQ(Stage("mine", out.Path(), {"--set", "nonsense=1"}).code, kExitConfig);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitConfig);
}

TEST_F(PipelineTest, MissingInputExitsThreeNamingFile) {
  testing_util::TempDir out;
  auto r = Stage("mine", out.Path());
  EXPECT_EQ(r.code, kExitMissingInput);
  EXPECT_NE(r.err.find(files::kSamplesTrain), std::string::npos) << r.err;
  r = Cli({"--set", "interactions=" + out.Path("nope.jsonl"), "--out", out.Path(),
           "ingest"});
  EXPECT_EQ(r.code, kExitMissingInput);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos) << r.err;
}

TEST_F(PipelineTest, InvariantViolationExitsFour) {
  testing_util::TempDir out;
  ASSERT_TRUE(Prepare(out.Path()));
  WriteTextFile(out.Path("partial.jsonl"), scoring::ScoreToJson("nobody@1", 1.0) + "\n");
  const auto r = Stage("score", out.Path(), {"--set", "score_file=" + out.Path("partial.jsonl")});
  EXPECT_EQ(r.code, kExitInvariant) << r.err;
}

TEST_F(PipelineTest, OracleScoreFileGivesPerfectJaccard) {
  testing_util::TempDir out;
  ASSERT_TRUE(Prepare(out.Path()));
  std::string scores;
  for (const auto& s : ingest::ReadSamples(out.Path(files::kSamplesTest))) {
    scores += scoring::ScoreToJson(s.sample_id, static_cast<double>(*s.label)) + "\n";
  }
  WriteTextFile(out.Path("oracle.jsonl"), scores);
  const auto r = Stage("evaluate", out.Path(),
                       {"--set", "score_file=" + out.Path("oracle.jsonl"),
                        "--set", "k_values=1,5,10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(ReadTextFile(out.Path(files::kMetrics)));
  for (const char* k : {"1", "5", "10"}) EXPECT_EQ(j["jaccard"][k], 1.0) << k;
}

TEST_F(PipelineTest, RunAllIsDeterministicAcrossRunsAndThreads) {
  testing_util::TempDir a, b, c;
  ASSERT_EQ(Stage("run-all", a.Path()).code, 0);
  ASSERT_EQ(Stage("run-all", b.Path()).code, 0);
  ASSERT_EQ(Stage("run-all", c.Path(), {"--threads", "4"}).code, 0);
  for (const char* f : {files::kMetrics, files::kHead, files::kTriplets,
                        files::kPredictions, files::kLossTrace}) {
    EXPECT_EQ(ReadTextFile(a.Path(f)), ReadTextFile(b.Path(f))) << f;
    EXPECT_EQ(ReadTextFile(a.Path(f)), ReadTextFile(c.Path(f))) << f;
  }
}

TEST_F(PipelineTest, StagesRerunFromSerializedArtifacts) {
  testing_util::TempDir out;
  ASSERT_EQ(Stage("run-all", out.Path()).code, 0);
  std::map<std::string, std::string> before;
  const std::vector<std::string> downstream = {files::kTriplets, files::kHead,
                                               files::kLossTrace, files::kScores,
                                               files::kPredictions, files::kMetrics};
  for (const auto& f : downstream) before[f] = ReadTextFile(out.Path(f));
  for (const auto& f : downstream) fs::remove(out.Path(f));
  for (const char* stage : {"mine", "train-head", "score", "explain", "evaluate"}) {
    const auto r = Stage(stage, out.Path());
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
  for (const auto& f : downstream) EXPECT_EQ(ReadTextFile(out.Path(f)), before[f]) << f;
}

TEST_F(PipelineTest, ConfigFileAndFlagOverride) {
  testing_util::TempDir out;
  WriteTextFile(out.Path("run.cfg"), "epochs = 2\nscorer = last_value\n");
  const auto r = Stage("ingest", out.Path(),
                       {"--config", out.Path("run.cfg"), "--set", "scorer=moving_average"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string echoed = ReadTextFile(out.Path("config.ingest.txt"));
  EXPECT_NE(echoed.find("scorer = moving_average"), std::string::npos);
}

TEST_F(PipelineTest, PredictionsCarryExplanations) {
  testing_util::TempDir out;
  ASSERT_EQ(Stage("run-all", out.Path()).code, 0);
  const auto lines = SplitLines(ReadTextFile(out.Path(files::kPredictions)));
  ASSERT_FALSE(lines.empty());
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.size(), 3u);
    const std::string e = j.at("explanation_of_score");
    EXPECT_EQ(e.rfind("[Trend]: ", 0), 0u);
    EXPECT_NE(e.find(" [Feature]: "), std::string::npos);
    EXPECT_NE(e.find(" [Integration]: "), std::string::npos);
    EXPECT_GE(j.at("predict_popularity_score").get<double>(), 0.0);
  }
}

}  // namespace
}  // namespace trail::pipeline
