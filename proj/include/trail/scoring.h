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

#ifndef TRAIL_SCORING_H_
#define TRAIL_SCORING_H_

#include <map>
#include <string>
#include <vector>

#include "trail/ingest.h"

namespace trail::scoring {

enum class ScorerKind { kLastValue, kMovingAverage, kLinearTrend };

// Parsed from "last_value", "moving_average", "moving_average:w=3" or
// "linear_trend" (optionally "linear_trend:points=6").
struct ScorerSpec {
  ScorerKind kind = ScorerKind::kLinearTrend;
  std::map<std::string, double> params;

  static ScorerSpec Parse(const std::string& text);
  std::string ToString() const;
  void Validate() const;
};

inline constexpr int kDefaultMovingAverageWindow = 3;
inline constexpr int kDefaultTrendPoints = 6;
// History shorter than this lets the metadata dominate the explanation.
inline constexpr std::size_t kTrendDominanceMinHistory = 2;

// Nonnegative predicted popularity for the sample's target window.
double Score(const ScorerSpec& spec, const ingest::Sample& sample);

struct ExplanationRecord {
  std::string trend_section;
  std::string feature_section;
  std::string integration_section;
  std::vector<std::string> feature_tokens;  // verbatim slices of the text

  // "[Trend]: ... [Feature]: ... [Integration]: ..."
  std::string Render() const;
};

ExplanationRecord Explain(const ingest::Sample& sample, double score,
                          int embed_dim = 256);

struct Prediction {
  std::string sample_id;
  std::string item_id;
  double predicted_score = 0.0;
  int rank = 0;
  ExplanationRecord explanation;
};

// Descending score, ties by ascending item_id, truncated to n, ranks 1..n.
// Duplicate item ids throw std::invalid_argument.
std::vector<Prediction> RankWindow(std::vector<Prediction> predictions,
                                   std::size_t n);

// {"sample_id", "predict_popularity_score", "explanation_of_score"}
std::string PredictionToJson(const Prediction& p);

// JSONL {"sample_id", "score"}.
std::map<std::string, double> ParseScoreFile(const std::string& text);
std::map<std::string, double> LoadScoreFile(const std::string& path);
// Throws InvariantError naming the first sample without a score.
void CheckScoreCoverage(const std::map<std::string, double>& scores,
                        const std::vector<ingest::Sample>& samples);
std::string ScoreToJson(const std::string& sample_id, double score);

// "rank\titem_id\tscore" lines with a header.
std::string RankedListTsv(const std::vector<Prediction>& ranked);
struct RankedEntry {
  int rank = 0;
  std::string item_id;
  double score = 0.0;
};
std::vector<RankedEntry> ParseRankedListTsv(const std::string& text);

}  // namespace trail::scoring

#endif  // TRAIL_SCORING_H_
