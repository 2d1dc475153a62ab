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

#ifndef TRAIL_SIMILARITY_H_
#define TRAIL_SIMILARITY_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trail/ingest.h"

namespace trail::similarity {

inline constexpr double kMaxChangeRate = 100.0;
inline constexpr int kDefaultEmbedDim = 256;

struct SimilarityWeights {
  double alpha = 0.4;  // trend
  double beta = 0.2;   // change rate
  double gamma = 0.4;  // metadata
  double sigma = 1.0;  // Gaussian width over change rates
  // Scale each trend sequence by its own maximum before DTW.
  bool normalize_trend = false;

  void Validate() const;
};

using Embedding = std::vector<double>;
using EmbeddingTable = std::map<std::string, Embedding>;

// Accumulated cost of the optimal monotone, boundary-anchored alignment
// with |x - y| point cost. Throws std::invalid_argument on empty input.
double DtwDistance(std::span<const double> a, std::span<const double> b);

// 1 / (1 + DTW). Both empty -> 1, exactly one empty -> 0.
double SimTrend(std::span<const double> a, std::span<const double> b);

// (current - previous) / previous with zero-denominator rules, clamped to
// [-1, kMaxChangeRate].
double ChangeRate(double previous, double current);
double ChangeRate(const ingest::PopularitySeries& series, int at_window);

// Rate at the sample's target window using its label when present; for an
// unlabeled sample the most recent observed step (T-2 -> T-1) is used.
double SampleChangeRate(const ingest::Sample& sample);

double SimLatest(double r1, double r2, double sigma);

// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
// UTF-8 words stay whole.
struct Token {
  std::string normalized;  // lowercase
  std::string_view original;  // slice of the input text
};
std::vector<Token> Tokenize(std::string_view text);

struct TokenHash {
  std::size_t bucket;
  double sign;
};
TokenHash HashToken(std::string_view normalized, int dim);

// Signed feature hashing, L2-normalized; empty text gives the zero vector.
Embedding EmbedText(std::string_view text, int dim = kDefaultEmbedDim);
Embedding EmbedMetadata(const ingest::ItemMetadata& meta,
                        int dim = kDefaultEmbedDim);

// Cosine clamped to [0, 1]; 0 if either vector is zero.
double SimMeta(std::span<const double> e1, std::span<const double> e2);

struct SimilarityBreakdown {
  double trend = 0.0;
  double latest = 0.0;
  double meta = 0.0;
  double total = 0.0;
};

std::vector<double> TrendValues(const ingest::Sample& s, bool normalize);

// Embeddings are looked up by item_id; a missing item throws InvariantError.
SimilarityBreakdown SimTotal(const ingest::Sample& s1, const ingest::Sample& s2,
                             const SimilarityWeights& w,
                             const EmbeddingTable& embeddings);

// Embeds every distinct item among `samples`.
EmbeddingTable BuildEmbeddings(const std::vector<ingest::Sample>& samples,
                               int dim);

// JSONL {"item_id", "vector"}; all vectors must share one dimension.
EmbeddingTable LoadEmbeddings(const std::string& path);
EmbeddingTable ParseEmbeddings(const std::string& text);
void WriteEmbeddings(const std::string& path, const EmbeddingTable& table);

// TSV header and row for the pairwise dump.
std::string PairwiseTsvHeader();
std::string PairwiseTsvRow(const std::string& a, const std::string& b,
                           const SimilarityBreakdown& s);

}  // namespace trail::similarity

#endif  // TRAIL_SIMILARITY_H_
