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

#ifndef TRAIL_MINING_H_
#define TRAIL_MINING_H_

#include <cstdint>
#include <string>
#include <vector>

#include "trail/ingest.h"
#include "trail/similarity.h"

namespace trail::mining {

struct Triplet {
  std::string anchor;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;

  bool operator==(const Triplet&) const = default;
};

enum class PoolMode { kBatch, kGlobal };

PoolMode ParsePoolMode(const std::string& name);

struct MiningConfig {
  PoolMode pool_mode = PoolMode::kBatch;
  int batch_size = 8;
  int n_pos = 2;
  int global_negatives = 6;  // negatives sampled per anchor in global mode
  std::uint64_t seed = 0;
  int threads = 1;

  void Validate() const;
};

// Dense symmetric n x n matrix, row-major.
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// M(i, j) = sim_total(s_i, s_j), diagonal fixed at 1.
SimilarityMatrix BuildSimilarityMatrix(
    const std::vector<ingest::Sample>& pool,
    const similarity::SimilarityWeights& w,
    const similarity::EmbeddingTable& embeddings, int threads = 1);

// Seeded shuffle of [0, n) cut into groups of batch_size. A trailing group
// smaller than min_group is folded into the group before it.
std::vector<std::vector<std::size_t>> MakeGroups(std::size_t n, int batch_size,
                                                 std::size_t min_group,
                                                 std::uint64_t seed);

struct MiningResult {
  std::vector<Triplet> triplets;  // sorted by anchor id
  std::vector<std::string> warnings;
};

// Positives are the n_pos most similar members of the anchor's pool
// (ties by ascending sample_id); in batch mode every other group member is a
// negative, in global mode global_negatives are drawn from the rest.
MiningResult MineTriplets(const std::vector<ingest::Sample>& pool,
                          const similarity::SimilarityWeights& w,
                          const similarity::EmbeddingTable& embeddings,
                          const MiningConfig& cfg);

// Mining within one explicit group using precomputed similarities.
// `members` index into `ids` and `sims`.
Triplet MineAnchor(std::size_t anchor, const std::vector<std::size_t>& members,
                   const std::vector<std::string>& ids,
                   const SimilarityMatrix& sims, int n_pos);

std::string TripletToJson(const Triplet& t);
Triplet TripletFromJson(const std::string& line);
void WriteTriplets(const std::string& path, const std::vector<Triplet>& t);
std::vector<Triplet> ReadTriplets(const std::string& path);

}  // namespace trail::mining

#endif  // TRAIL_MINING_H_
