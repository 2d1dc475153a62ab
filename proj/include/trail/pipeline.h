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

// Staged pipeline. Each stage reads its predecessors' artifacts from the
// output directory and writes its own:
//
//   ingest      -> series.jsonl, metadata.jsonl, user_item_windows.tsv,
//                  ingest_summary.json
//   split       -> samples_{train,val,test}.jsonl, split.json
//   similarity  -> item_embeddings.jsonl, similarity_train.tsv
//   mine        -> triplets.jsonl
//   train-head  -> head.json, loss_trace.csv, train_summary.json
//   score       -> scores.jsonl, ranked.tsv
//   explain     -> predictions.jsonl
//   evaluate    -> metrics.json

#ifndef TRAIL_PIPELINE_H_
#define TRAIL_PIPELINE_H_

#include <ostream>
#include <string>
#include <vector>

#include "trail/config.h"

namespace trail::pipeline {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingInput = 3,
  kExitInvariant = 4,
};

namespace files {
inline constexpr const char* kSeries = "series.jsonl";
inline constexpr const char* kMetadata = "metadata.jsonl";
inline constexpr const char* kUserItemWindows = "user_item_windows.tsv";
inline constexpr const char* kIngestSummary = "ingest_summary.json";
inline constexpr const char* kSamplesTrain = "samples_train.jsonl";
inline constexpr const char* kSamplesVal = "samples_val.jsonl";
inline constexpr const char* kSamplesTest = "samples_test.jsonl";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kItemEmbeddings = "item_embeddings.jsonl";
inline constexpr const char* kSimilarity = "similarity_train.tsv";
inline constexpr const char* kTriplets = "triplets.jsonl";
inline constexpr const char* kHead = "head.json";
inline constexpr const char* kLossTrace = "loss_trace.csv";
inline constexpr const char* kTrainSummary = "train_summary.json";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kRanked = "ranked.tsv";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kMetrics = "metrics.json";
}  // namespace files

// ingest, split, similarity, mine, train-head, score, explain, evaluate.
const std::vector<std::string>& StageNames();

// Runs one stage, or every stage in order for "run-all". Throws the
// trail error types on failure.
void RunStage(const std::string& name, const config::PipelineConfig& cfg,
              std::ostream& log);

// Full command line (args[0] is the program name). Returns an ExitCode.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err, const config::EnvLookup& env);

}  // namespace trail::pipeline

#endif  // TRAIL_PIPELINE_H_
