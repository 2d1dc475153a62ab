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

#include "trail/similarity.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "trail/common.h"

namespace trail::similarity {
namespace {

// Fixed seed so bucket assignment never depends on the platform.
constexpr std::uint64_t kTokenSeed = Fnv1a64("trail-metadata-hash-v1");

bool IsWordByte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void SimilarityWeights::Validate() const {
  if (!(alpha >= 0) || !(beta >= 0) || !(gamma >= 0)) {
    throw ConfigError("alpha, beta and gamma must be nonnegative");
  }
  if (!(alpha + beta + gamma > 0)) {
    throw ConfigError("alpha + beta + gamma must be positive");
  }
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be positive");
  }
}

double DtwDistance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("DtwDistance requires non-empty sequences");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Two rolling rows of the cumulative cost matrix; column 0 is the +inf
  // boundary.
  std::vector<double> prev(b.size() + 1, kInf), cur(b.size() + 1, kInf);
  for (std::size_t i = 0; i < a.size(); ++i) {
    cur[0] = kInf;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double cost = std::abs(a[i] - b[j]);
      if (i == 0 && j == 0) {
        cur[1] = cost;
        continue;
      }
      cur[j + 1] = cost + std::min({prev[j + 1], cur[j], prev[j]});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double SimTrend(std::span<const double> a, std::span<const double> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  return 1.0 / (1.0 + DtwDistance(a, b));
}

double ChangeRate(double previous, double current) {
  double r;
  if (previous == 0.0) {
    r = current;  // denominator treated as 1
  } else {
    r = (current - previous) / previous;
  }
  return std::clamp(r, -1.0, kMaxChangeRate);
}

double ChangeRate(const ingest::PopularitySeries& series, int at_window) {
  return ChangeRate(static_cast<double>(series.at(at_window - 1)),
                    static_cast<double>(series.at(at_window)));
}

double SampleChangeRate(const ingest::Sample& s) {
  const int t = s.target_window;
  if (s.label) {
    return ChangeRate(static_cast<double>(s.history_at(t - 1)),
                      static_cast<double>(*s.label));
  }
  return ChangeRate(static_cast<double>(s.history_at(t - 2)),
                    static_cast<double>(s.history_at(t - 1)));
}

double SimLatest(double r1, double r2, double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  const double d = r1 - r2;
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !IsWordByte(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    const std::size_t start = i;
    while (i < text.size() && IsWordByte(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i > start) {
      Token t;
      t.original = text.substr(start, i - start);
      t.normalized.reserve(t.original.size());
      for (char c : t.original) {
        t.normalized.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32)
                                                    : c);
      }
      tokens.push_back(std::move(t));
    }
  }
  return tokens;
}

TokenHash HashToken(std::string_view normalized, int dim) {
  const std::uint64_t h = Fnv1a64(normalized, kTokenSeed);
  return {static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim)),
          (h >> 63) ? -1.0 : 1.0};
}

Embedding EmbedText(std::string_view text, int dim) {
  if (dim < 8) throw ConfigError("embed_dim must be >= 8");
  Embedding v(static_cast<std::size_t>(dim), 0.0);
  for (const auto& tok : Tokenize(text)) {
    const TokenHash th = HashToken(tok.normalized, dim);
    v[th.bucket] += th.sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  // Colliding tokens of opposite sign can cancel to zero; that stays zero.
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

Embedding EmbedMetadata(const ingest::ItemMetadata& meta, int dim) {
  return EmbedText(meta.description_text, dim);
}

double SimMeta(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size()) {
    throw std::invalid_argument("embedding dimension mismatch: " +
                                std::to_string(e1.size()) + " vs " +
                                std::to_string(e2.size()));
  }
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    dot += e1[i] * e2[i];
    n1 += e1[i] * e1[i];
    n2 += e2[i] * e2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(n1) * std::sqrt(n2)), 0.0, 1.0);
}

std::vector<double> TrendValues(const ingest::Sample& s, bool normalize) {
  std::vector<double> v(s.history.begin(), s.history.end());
  if (normalize && !v.empty()) {
    const double peak = *std::max_element(v.begin(), v.end());
    if (peak > 0) {
      for (double& x : v) x /= peak;
    }
  }
  return v;
}

SimilarityBreakdown SimTotal(const ingest::Sample& s1, const ingest::Sample& s2,
                             const SimilarityWeights& w,
                             const EmbeddingTable& embeddings) {
  auto lookup = [&](const std::string& item) -> const Embedding& {
    auto it = embeddings.find(item);
    if (it == embeddings.end()) {
      throw InvariantError("no embedding for item " + item);
    }
    return it->second;
  };
  SimilarityBreakdown out;
  const auto h1 = TrendValues(s1, w.normalize_trend);
  const auto h2 = TrendValues(s2, w.normalize_trend);
  out.trend = SimTrend(h1, h2);
  out.latest =
      SimLatest(SampleChangeRate(s1), SampleChangeRate(s2), w.sigma);
  out.meta = SimMeta(lookup(s1.item_id), lookup(s2.item_id));
  out.total = w.alpha * out.trend + w.beta * out.latest + w.gamma * out.meta;
  return out;
}

EmbeddingTable BuildEmbeddings(const std::vector<ingest::Sample>& samples,
                               int dim) {
  EmbeddingTable table;
  for (const auto& s : samples) {
    if (!table.count(s.item_id)) {
      table.emplace(s.item_id, EmbedText(s.description_text, dim));
    }
  }
  return table;
}

EmbeddingTable ParseEmbeddings(const std::string& text) {
  using nlohmann::json;
  EmbeddingTable table;
  std::size_t dim = 0;
  const auto lines = SplitLines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "embedding line " + std::to_string(n + 1);
    json j = json::parse(lines[n], nullptr, false);
    if (!j.is_object() || !j.contains("item_id") || !j.contains("vector") ||
        !j["item_id"].is_string() || !j["vector"].is_array()) {
      throw InvariantError(where + ": expected {item_id, vector}");
    }
    Embedding v;
    for (const auto& x : j["vector"]) {
      if (!x.is_number()) throw InvariantError(where + ": non-numeric entry");
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw InvariantError(where + ": empty vector");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw InvariantError(where + ": dimension " + std::to_string(v.size()) +
                           " differs from " + std::to_string(dim));
    }
    table[j["item_id"].get<std::string>()] = std::move(v);
  }
  return table;
}

EmbeddingTable LoadEmbeddings(const std::string& path) {
  return ParseEmbeddings(ReadTextFile(path));
}

void WriteEmbeddings(const std::string& path, const EmbeddingTable& table) {
  std::string out;
  for (const auto& [item, v] : table) {
    nlohmann::ordered_json j;
    j["item_id"] = item;
    j["vector"] = v;
    out += j.dump();
    out += '\n';
  }
  WriteTextFile(path, out);
}

std::string PairwiseTsvHeader() {
  return "sample_id_a\tsample_id_b\tsim_trend\tsim_latest\tsim_meta\tsim_total";
}

std::string PairwiseTsvRow(const std::string& a, const std::string& b,
                           const SimilarityBreakdown& s) {
  return a + '\t' + b + '\t' + Fmt(s.trend) + '\t' + Fmt(s.latest) + '\t' +
         Fmt(s.meta) + '\t' + Fmt(s.total);
}

}  // namespace trail::similarity
