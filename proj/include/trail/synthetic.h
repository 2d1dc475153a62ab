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

// Deterministic synthetic interaction corpus with a handful of planted items
// whose popularity grows linearly and dominates the last window.

#ifndef TRAIL_SYNTHETIC_H_
#define TRAIL_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "trail/ingest.h"

namespace trail::synthetic {

struct CorpusSpec {
  int items = 50;
  int windows = 12;
  int planted = 5;
  int users = 400;
  int window_days = 30;
  std::int64_t origin = 1262304000;  // 2010-01-01T00:00:00Z
  std::uint64_t seed = 7;
};

struct Corpus {
  std::vector<ingest::InteractionRecord> interactions;  // sorted by time
  std::vector<ingest::ItemMetadata> metadata;           // sorted by item_id
  std::vector<std::string> planted_items;               // sorted
};

// Planted item k has 4 + (3 + k) * t distinct users in window t. Other items
// start at a random window and draw 0..4 users per window. Every user active
// in the last window touches at least one planted item.
Corpus Generate(const CorpusSpec& spec);

std::string InteractionsJsonl(const Corpus& corpus);
std::string MetadataJsonl(const Corpus& corpus);

}  // namespace trail::synthetic

#endif  // TRAIL_SYNTHETIC_H_
