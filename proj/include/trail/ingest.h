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

// Interaction-log ingestion: windowing on a global timeline, per-item
// popularity series and leakage-free temporal sample splits.

#ifndef TRAIL_INGEST_H_
#define TRAIL_INGEST_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trail::ingest {

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  bool operator==(const InteractionRecord&) const = default;
};

struct ItemMetadata {
  std::string item_id;
  std::string description_text;
  std::map<std::string, std::string> attributes;
};

using MetadataMap = std::map<std::string, ItemMetadata>;

struct WindowConfig {
  int window_days = 30;
  std::int64_t origin = 0;  // epoch seconds at the start of window 1
};

enum class CountMode { kDistinctUsers, kEvents };

enum class LogFormat { kJsonl, kCsv };

// counts[k] is the popularity at window first_window + k. Windows after the
// last stored entry have popularity 0.
struct PopularitySeries {
  std::string item_id;
  int first_window = 1;
  std::vector<std::int64_t> counts;

  int last_window() const {
    return first_window + static_cast<int>(counts.size()) - 1;
  }
  // Popularity at `window`; 0 outside the stored range.
  std::int64_t at(int window) const;
};

using SeriesMap = std::map<std::string, PopularitySeries>;

// One (item, target window) unit of training or evaluation. `history` holds
// the popularity for windows first_window .. target_window-1, so it is empty
// for a release-window (cold start) sample.
struct Sample {
  std::string sample_id;
  std::string item_id;
  int target_window = 1;
  int first_window = 1;
  std::vector<std::int64_t> history;
  std::string description_text;
  std::optional<std::int64_t> label;

  bool cold_start() const { return history.empty(); }
  // Popularity at window t < target_window, 0 before first_window.
  std::int64_t history_at(int t) const;
};

std::string MakeSampleId(const std::string& item_id, int target_window);

struct WindowRange {
  int first = 1;
  int last = 0;

  bool empty() const { return last < first; }
  bool contains(int w) const { return w >= first && w <= last; }
  bool operator==(const WindowRange&) const = default;
};

struct DatasetSplit {
  WindowRange train;
  WindowRange val;
  WindowRange test;

  // Throws ConfigError unless the ranges are non-empty, ascending,
  // non-overlapping and contiguous.
  void Validate() const;
};

// Last window is test, the one before is validation, the rest is training.
DatasetSplit DefaultSplit(int max_window);

struct ParseResult {
  std::vector<InteractionRecord> records;
  std::size_t malformed_count = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based line numbers
};

// Reads an interaction log. Malformed lines are counted; with `strict` any
// malformed line is fatal (InvariantError). Unreadable file -> InputError.
ParseResult ParseInteractions(const std::string& path, LogFormat format,
                              bool strict = false);
ParseResult ParseInteractionsText(const std::string& text, LogFormat format,
                                  bool strict = false);

MetadataMap ParseMetadata(const std::string& path);
MetadataMap ParseMetadataText(const std::string& text);

LogFormat ParseLogFormat(const std::string& name);

// Minimum timestamp truncated to midnight UTC. Empty input -> 0.
std::int64_t DefaultOrigin(const std::vector<InteractionRecord>& records);

// floor((timestamp - origin) / window_seconds) + 1.
int WindowIndex(std::int64_t timestamp, const WindowConfig& cfg);

SeriesMap BuildSeries(const std::vector<InteractionRecord>& records,
                      const WindowConfig& cfg,
                      CountMode mode = CountMode::kDistinctUsers);

// Deduplicated (user, item, window) triples, sorted.
struct UserItemWindow {
  std::string user_id;
  std::string item_id;
  int window = 1;
  auto operator<=>(const UserItemWindow&) const = default;
};
std::vector<UserItemWindow> UserItemWindows(
    const std::vector<InteractionRecord>& records, const WindowConfig& cfg);

struct SplitSamples {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::vector<std::string> warnings;
};

// Samples are ordered by target window, then item_id.
SplitSamples MakeSamples(const SeriesMap& series, const MetadataMap& metadata,
                         const DatasetSplit& split);

// Throws InvariantError if any train target >= a val target, any val target
// >= a test target, or any history reaches its own target window.
void CheckLeakageFree(const SplitSamples& samples);

// JSONL with keys sample_id, item_id, target_window, history, first_window,
// description_text, label (null when absent).
std::string SampleToJson(const Sample& s);
Sample SampleFromJson(const std::string& line);
void WriteSamples(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> ReadSamples(const std::string& path);

void WriteSeries(const std::string& path, const SeriesMap& series);
SeriesMap ReadSeries(const std::string& path);

}  // namespace trail::ingest

#endif  // TRAIL_INGEST_H_
