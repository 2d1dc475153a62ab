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

#include "trail/synthetic.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>

#include "json.hpp"
#include "trail/common.h"

namespace trail::synthetic {
namespace {

constexpr const char* kVocab[] = {
    "Comedy",   "drama",     "thriller",  "romance",  "documentary",
    "animated", "family",    "sequel",    "director", "award",
    "cast",     "soundtrack", "mystery",  "historical", "adventure",
    "ergonomic", "silicone", "portable",  "compact",  "durable",
    "organic",  "wireless",  "classic",   "budget",   "premium"};

constexpr const char* kPlantedVocab[] = {"blockbuster", "acclaimed", "franchise",
                                         "spectacular", "viral"};

std::string ItemId(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "item_%02d", i);
  return buf;
}

std::string UserId(int u) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%04d", u);
  return buf;
}

// `count` distinct users drawn from `from`.
std::vector<int> DrawUsers(Rng& rng, std::vector<int> from, int count) {
  rng.Shuffle(from);
  from.resize(std::min<std::size_t>(from.size(), static_cast<std::size_t>(count)));
  return from;
}

}  // namespace

Corpus Generate(const CorpusSpec& spec) {
  if (spec.items < spec.planted || spec.planted < 1 || spec.windows < 3) {
    throw ConfigError("synthetic corpus needs planted <= items and >= 3 windows");
  }
  const int max_planted_count = 4 + (3 + spec.planted - 1) * spec.windows;
  if (spec.users < max_planted_count) {
    throw ConfigError("synthetic corpus needs at least " +
                      std::to_string(max_planted_count) + " users");
  }
  Rng rng(spec.seed);
  Corpus corpus;

  std::vector<int> order(static_cast<std::size_t>(spec.items));
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order);
  std::set<int> planted(order.begin(), order.begin() + spec.planted);

  std::vector<int> all_users(static_cast<std::size_t>(spec.users));
  std::iota(all_users.begin(), all_users.end(), 0);
  const std::int64_t width = std::int64_t{spec.window_days} * 86400;

  auto emit = [&](int item, int window, const std::vector<int>& users) {
    for (int u : users) {
      const std::int64_t ts = spec.origin + (window - 1) * width +
                              static_cast<std::int64_t>(rng.Below(
                                  static_cast<std::uint64_t>(width)));
      corpus.interactions.push_back({UserId(u), ItemId(item), ts});
    }
  };

  // Planted items first so the last window's active users are known.
  std::set<int> last_window_users;
  int rank = 0;
  for (int item : planted) {
    for (int t = 1; t <= spec.windows; ++t) {
      const auto users = DrawUsers(rng, all_users, 4 + (3 + rank) * t);
      if (t == spec.windows) last_window_users.insert(users.begin(), users.end());
      emit(item, t, users);
    }
    ++rank;
  }
  const std::vector<int> last_pool(last_window_users.begin(),
                                   last_window_users.end());
  for (int item = 0; item < spec.items; ++item) {
    if (planted.count(item)) continue;
    const int first = 1 + static_cast<int>(rng.Below(
                              static_cast<std::uint64_t>(spec.windows)));
    for (int t = first; t <= spec.windows; ++t) {
      int count = static_cast<int>(rng.Below(5));
      if (t == first) count = std::max(count, 1);
      const auto& pool = t == spec.windows ? last_pool : all_users;
      emit(item, t, DrawUsers(rng, pool, count));
    }
  }
  std::sort(corpus.interactions.begin(), corpus.interactions.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.timestamp, a.item_id, a.user_id) <
                     std::tie(b.timestamp, b.item_id, b.user_id);
            });

  for (int item = 0; item < spec.items; ++item) {
    ingest::ItemMetadata m;
    m.item_id = ItemId(item);
    const int words = 6 + static_cast<int>(rng.Below(5));
    std::string text;
    if (planted.count(item)) {
      text = std::string(kPlantedVocab[rng.Below(std::size(kPlantedVocab))]) +
             " " + kPlantedVocab[rng.Below(std::size(kPlantedVocab))];
    }
    for (int w = 0; w < words; ++w) {
      if (!text.empty()) text += ' ';
      text += kVocab[rng.Below(std::size(kVocab))];
    }
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    m.description_text = text + ".";
    m.attributes["category"] = kVocab[rng.Below(5)];
    corpus.metadata.push_back(std::move(m));
    if (planted.count(item)) corpus.planted_items.push_back(ItemId(item));
  }
  return corpus;
}

std::string InteractionsJsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.interactions) {
    nlohmann::ordered_json j;
    j["user_id"] = r.user_id;
    j["item_id"] = r.item_id;
    j["timestamp"] = r.timestamp;
    out += j.dump() + "\n";
  }
  return out;
}

std::string MetadataJsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& m : corpus.metadata) {
    nlohmann::ordered_json j;
    j["item_id"] = m.item_id;
    j["description_text"] = m.description_text;
    j["attributes"] = m.attributes;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace trail::synthetic
