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

#ifndef TRAIL_CONFIG_H_
#define TRAIL_CONFIG_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trail/contrastive.h"
#include "trail/ingest.h"
#include "trail/mining.h"
#include "trail/scoring.h"
#include "trail/similarity.h"

namespace trail::config {

enum class TruthFilter { kAll, kCold, kWarm };

// Every pipeline knob. Loaded from a flat `key = value` file, then
// TRAIL_<KEY> environment variables, then command-line overrides.
struct PipelineConfig {
  // Inputs and outputs.
  std::string interactions;
  ingest::LogFormat interactions_format = ingest::LogFormat::kJsonl;
  std::string metadata;
  std::string embeddings;  // precomputed item vectors; empty = hashing
  std::string score_file;  // external scorer output; empty = built-in scorer
  std::string out = "trail_out";

  // ingest
  int window_days = 30;
  std::optional<std::int64_t> origin;  // nullopt = derive from corpus
  ingest::CountMode count_mode = ingest::CountMode::kDistinctUsers;
  std::optional<ingest::WindowRange> train_windows;  // nullopt = default
  std::optional<ingest::WindowRange> val_windows;
  std::optional<ingest::WindowRange> test_windows;
  bool strict = false;

  // similarity / mining
  similarity::SimilarityWeights weights;
  int embed_dim = similarity::kDefaultEmbedDim;
  int n_pos = 2;
  mining::PoolMode pool_mode = mining::PoolMode::kBatch;
  int batch_size = 8;
  int global_negatives = 6;

  // contrastive
  double tau = 0.1;
  double lambda = 1.0;
  double dropout_rate = 0.1;
  double learning_rate = 0.05;
  int epochs = 20;
  int hidden_dim = 256;
  int out_dim = 128;

  // scoring / eval
  scoring::ScorerSpec scorer;
  std::size_t top_n = 0;  // 0 = rank every item
  std::vector<int> k_values = {5, 10};
  TruthFilter truth_filter = TruthFilter::kAll;

  std::uint64_t seed = 42;
  int threads = 1;

  // Throws ConfigError naming the offending key.
  void Validate() const;

  // Canonical `key = value` text, keys sorted.
  std::string Serialize() const;

  mining::MiningConfig Mining() const;
  contrastive::TrainConfig Training() const;
};

const std::vector<std::string>& KnownKeys();

// Applies one key/value pair; throws ConfigError on unknown keys or values
// that do not parse.
void SetKey(PipelineConfig& cfg, const std::string& key,
            const std::string& value);

// Parses `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> ParseKeyValues(const std::string& text);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup ProcessEnv();

// file (may be empty for defaults) < environment < overrides. Validated.
PipelineConfig Load(const std::string& path, const EnvLookup& env,
                    const std::map<std::string, std::string>& overrides);

std::string EnvName(const std::string& key);

// Per-stage seed derivation: seed + fixed stage offset.
inline constexpr std::uint64_t kMineSeedOffset = 101;
inline constexpr std::uint64_t kHeadInitSeedOffset = 202;
inline constexpr std::uint64_t kTrainSeedOffset = 303;

}  // namespace trail::config

#endif  // TRAIL_CONFIG_H_
