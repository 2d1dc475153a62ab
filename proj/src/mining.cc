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

#include "trail/mining.h"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "trail/common.h"

namespace trail::mining {

PoolMode ParsePoolMode(const std::string& name) {
  if (name == "batch") return PoolMode::kBatch;
  if (name == "global") return PoolMode::kGlobal;
  throw ConfigError("pool_mode must be batch or global, got '" + name + "'");
}

void MiningConfig::Validate() const {
  if (n_pos < 1) throw ConfigError("n_pos must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (pool_mode == PoolMode::kBatch && batch_size < n_pos + 1) {
    throw ConfigError("batch_size must be at least n_pos + 1");
  }
  if (global_negatives < 1) throw ConfigError("global_negatives must be >= 1");
}

SimilarityMatrix BuildSimilarityMatrix(
    const std::vector<ingest::Sample>& pool,
    const similarity::SimilarityWeights& w,
    const similarity::EmbeddingTable& embeddings, int threads) {
  const std::size_t n = pool.size();
  SimilarityMatrix m(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = similarity::SimTotal(pool[i], pool[j], w, embeddings).total;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  }
  return m;
}

std::vector<std::vector<std::size_t>> MakeGroups(std::size_t n, int batch_size,
                                                 std::size_t min_group,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);
  std::vector<std::vector<std::size_t>> groups;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < n; start += b) {
    const std::size_t end = std::min(n, start + b);
    std::vector<std::size_t> g(order.begin() + static_cast<std::ptrdiff_t>(start),
                               order.begin() + static_cast<std::ptrdiff_t>(end));
    if (g.size() < min_group && !groups.empty()) {
      groups.back().insert(groups.back().end(), g.begin(), g.end());
    } else {
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

namespace {

// Candidates ordered by descending similarity, ties by ascending id.
std::vector<std::size_t> RankCandidates(std::size_t anchor,
                                        const std::vector<std::size_t>& members,
                                        const std::vector<std::string>& ids,
                                        const SimilarityMatrix& sims) {
  std::vector<std::size_t> cand;
  for (std::size_t m : members) {
    if (m != anchor) cand.push_back(m);
  }
  std::sort(cand.begin(), cand.end(), [&](std::size_t x, std::size_t y) {
    const double sx = sims(anchor, x), sy = sims(anchor, y);
    if (sx != sy) return sx > sy;
    return ids[x] < ids[y];
  });
  return cand;
}

}  // namespace

Triplet MineAnchor(std::size_t anchor, const std::vector<std::size_t>& members,
                   const std::vector<std::string>& ids,
                   const SimilarityMatrix& sims, int n_pos) {
  const auto cand = RankCandidates(anchor, members, ids, sims);
  Triplet t;
  t.anchor = ids[anchor];
  for (std::size_t k = 0; k < cand.size(); ++k) {
    (static_cast<int>(k) < n_pos ? t.positives : t.negatives)
        .push_back(ids[cand[k]]);
  }
  return t;
}

MiningResult MineTriplets(const std::vector<ingest::Sample>& pool,
                          const similarity::SimilarityWeights& w,
                          const similarity::EmbeddingTable& embeddings,
                          const MiningConfig& cfg) {
  cfg.Validate();
  w.Validate();
  MiningResult result;
  if (pool.empty()) return result;

  std::vector<std::string> ids;
  ids.reserve(pool.size());
  for (const auto& s : pool) ids.push_back(s.sample_id);
  {
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvariantError("duplicate sample_id in mining pool");
    }
  }
  const SimilarityMatrix sims =
      BuildSimilarityMatrix(pool, w, embeddings, cfg.threads);
  const auto need = static_cast<std::size_t>(cfg.n_pos) + 1;

  if (cfg.pool_mode == PoolMode::kBatch) {
    // Shuffle canonical (id-sorted) positions so grouping does not depend on
    // input order.
    std::vector<std::size_t> by_id(pool.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    for (auto group : MakeGroups(pool.size(), cfg.batch_size, need, cfg.seed)) {
      for (auto& g : group) g = by_id[g];
      if (group.size() < need) {
        for (std::size_t a : group) {
          result.warnings.push_back("anchor " + ids[a] +
                                    " skipped: group smaller than n_pos + 1");
        }
        continue;
      }
      for (std::size_t a : group) {
        result.triplets.push_back(MineAnchor(a, group, ids, sims, cfg.n_pos));
      }
    }
  } else {
    if (pool.size() < need) {
      result.warnings.push_back("pool smaller than n_pos + 1; no triplets");
      return result;
    }
    std::vector<std::size_t> all(pool.size());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t a = 0; a < pool.size(); ++a) {
      Triplet t = MineAnchor(a, all, ids, sims, cfg.n_pos);
      // Per-anchor stream keyed by the anchor id keeps sampling independent
      // of pool order.
      std::sort(t.negatives.begin(), t.negatives.end());
      Rng rng(cfg.seed ^ Fnv1a64(ids[a]));
      rng.Shuffle(t.negatives);
      if (t.negatives.size() > static_cast<std::size_t>(cfg.global_negatives)) {
        t.negatives.resize(static_cast<std::size_t>(cfg.global_negatives));
      }
      std::sort(t.negatives.begin(), t.negatives.end());
      result.triplets.push_back(std::move(t));
    }
  }
  std::sort(result.triplets.begin(), result.triplets.end(),
            [](const Triplet& x, const Triplet& y) { return x.anchor < y.anchor; });
  return result;
}

std::string TripletToJson(const Triplet& t) {
  nlohmann::ordered_json j;
  j["anchor"] = t.anchor;
  j["positives"] = t.positives;
  j["negatives"] = t.negatives;
  return j.dump();
}

Triplet TripletFromJson(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  try {
    Triplet t;
    t.anchor = j.at("anchor").get<std::string>();
    t.positives = j.at("positives").get<std::vector<std::string>>();
    t.negatives = j.at("negatives").get<std::vector<std::string>>();
    if (t.positives.empty()) {
      throw InvariantError("triplet " + t.anchor + " has no positives");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("bad triplet record: ") + e.what());
  }
}

void WriteTriplets(const std::string& path, const std::vector<Triplet>& ts) {
  std::string out;
  for (const auto& t : ts) {
    out += TripletToJson(t);
    out += '\n';
  }
  WriteTextFile(path, out);
}

std::vector<Triplet> ReadTriplets(const std::string& path) {
  std::vector<Triplet> out;
  for (const auto& line : SplitLines(ReadTextFile(path))) {
    if (line.empty()) continue;
    out.push_back(TripletFromJson(line));
  }
  return out;
}

}  // namespace trail::mining
