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

#include "trail/ingest.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "trail/common.h"

namespace trail::ingest {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<InteractionRecord> RecordFromJson(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return std::nullopt;
  auto user = j.find("user_id");
  auto item = j.find("item_id");
  auto ts = j.find("timestamp");
  if (user == j.end() || item == j.end() || ts == j.end()) return std::nullopt;
  if (!user->is_string() || !item->is_string()) return std::nullopt;
  if (!ts->is_number_integer()) return std::nullopt;
  InteractionRecord r{user->get<std::string>(), item->get<std::string>(),
                      ts->get<std::int64_t>()};
  if (r.user_id.empty() || r.item_id.empty() || r.timestamp < 0) {
    return std::nullopt;
  }
  return r;
}

std::string Trim(std::string_view s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  if (b >= e) return {};
  std::string out(b, e);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) fields.push_back(Trim(cur));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::optional<std::int64_t> ParseInt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return static_cast<std::int64_t>(v);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::int64_t PopularitySeries::at(int window) const {
  if (window < first_window || window > last_window()) return 0;
  return counts[static_cast<std::size_t>(window - first_window)];
}

std::int64_t Sample::history_at(int t) const {
  if (t < first_window || t >= target_window) return 0;
  return history[static_cast<std::size_t>(t - first_window)];
}

std::string MakeSampleId(const std::string& item_id, int target_window) {
  return item_id + "@" + std::to_string(target_window);
}

void DatasetSplit::Validate() const {
  if (train.empty() || val.empty() || test.empty()) {
    throw ConfigError("split ranges must be non-empty");
  }
  if (train.first < 1) throw ConfigError("train_windows must start at >= 1");
  if (val.first != train.last + 1 || test.first != val.last + 1) {
    throw ConfigError(
        "split ranges must be ascending, contiguous and non-overlapping");
  }
}

DatasetSplit DefaultSplit(int max_window) {
  if (max_window < 3) {
    throw ConfigError("default split needs at least 3 windows, corpus has " +
                      std::to_string(max_window));
  }
  return DatasetSplit{{1, max_window - 2},
                      {max_window - 1, max_window - 1},
                      {max_window, max_window}};
}

LogFormat ParseLogFormat(const std::string& name) {
  if (name == "jsonl") return LogFormat::kJsonl;
  if (name == "csv") return LogFormat::kCsv;
  throw ConfigError("interactions_format must be jsonl or csv, got '" + name +
                    "'");
}

ParseResult ParseInteractionsText(const std::string& text, LogFormat format,
                                  bool strict) {
  ParseResult result;
  const auto lines = SplitLines(text);
  int user_col = -1, item_col = -1, ts_col = -1;
  bool header_seen = format == LogFormat::kJsonl;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (IsBlank(line)) continue;
    std::optional<InteractionRecord> rec;
    if (format == LogFormat::kJsonl) {
      rec = RecordFromJson(line);
    } else if (!header_seen) {
      const auto cols = SplitCsv(line);
      for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
        if (cols[c] == "user_id") user_col = c;
        if (cols[c] == "item_id") item_col = c;
        if (cols[c] == "timestamp") ts_col = c;
      }
      if (user_col < 0 || item_col < 0 || ts_col < 0) {
        throw InvariantError(
            "csv header must name user_id, item_id and timestamp columns");
      }
      header_seen = true;
      continue;
    } else {
      const auto cols = SplitCsv(line);
      const int need = std::max({user_col, item_col, ts_col});
      if (static_cast<int>(cols.size()) > need) {
        auto ts = ParseInt(cols[ts_col]);
        if (ts && *ts >= 0 && !cols[user_col].empty() &&
            !cols[item_col].empty()) {
          rec = InteractionRecord{cols[user_col], cols[item_col], *ts};
        }
      }
    }
    if (rec) {
      result.records.push_back(std::move(*rec));
    } else {
      ++result.malformed_count;
      result.malformed_lines.push_back(n + 1);
    }
  }
  if (strict && result.malformed_count > 0) {
    throw InvariantError(std::to_string(result.malformed_count) +
                         " malformed interaction line(s), first at line " +
                         std::to_string(result.malformed_lines.front()));
  }
  return result;
}

ParseResult ParseInteractions(const std::string& path, LogFormat format,
                              bool strict) {
  return ParseInteractionsText(ReadTextFile(path), format, strict);
}

MetadataMap ParseMetadataText(const std::string& text) {
  MetadataMap out;
  const auto lines = SplitLines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (IsBlank(lines[n])) continue;
    const std::string where = "metadata line " + std::to_string(n + 1);
    json j = json::parse(lines[n], nullptr, false);
    if (!j.is_object() || !j.contains("item_id") ||
        !j["item_id"].is_string() || j["item_id"].get<std::string>().empty()) {
      throw InvariantError(where + ": expected object with item_id");
    }
    ItemMetadata m;
    m.item_id = j["item_id"].get<std::string>();
    if (j.contains("description_text")) {
      if (!j["description_text"].is_string()) {
        throw InvariantError(where + ": description_text must be a string");
      }
      m.description_text = j["description_text"].get<std::string>();
    }
    if (j.contains("attributes")) {
      if (!j["attributes"].is_object()) {
        throw InvariantError(where + ": attributes must be an object");
      }
      for (const auto& [k, v] : j["attributes"].items()) {
        m.attributes[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    if (out.count(m.item_id)) {
      throw InvariantError(where + ": duplicate item_id " + m.item_id);
    }
    out.emplace(m.item_id, std::move(m));
  }
  return out;
}

MetadataMap ParseMetadata(const std::string& path) {
  return ParseMetadataText(ReadTextFile(path));
}

std::int64_t DefaultOrigin(const std::vector<InteractionRecord>& records) {
  if (records.empty()) return 0;
  std::int64_t lo = records.front().timestamp;
  for (const auto& r : records) lo = std::min(lo, r.timestamp);
  return lo - lo % kSecondsPerDay;
}

int WindowIndex(std::int64_t timestamp, const WindowConfig& cfg) {
  if (cfg.window_days < 1) throw ConfigError("window_days must be >= 1");
  if (timestamp < cfg.origin) {
    throw InvariantError("event at " + std::to_string(timestamp) +
                         " precedes window origin " +
                         std::to_string(cfg.origin));
  }
  const std::int64_t width = std::int64_t{cfg.window_days} * kSecondsPerDay;
  return static_cast<int>((timestamp - cfg.origin) / width) + 1;
}

SeriesMap BuildSeries(const std::vector<InteractionRecord>& records,
                      const WindowConfig& cfg, CountMode mode) {
  // item -> window -> (distinct users, events)
  std::map<std::string, std::map<int, std::pair<std::set<std::string>,
                                                std::int64_t>>>
      buckets;
  for (const auto& r : records) {
    auto& cell = buckets[r.item_id][WindowIndex(r.timestamp, cfg)];
    cell.first.insert(r.user_id);
    ++cell.second;
  }
  SeriesMap out;
  for (auto& [item, windows] : buckets) {
    PopularitySeries s;
    s.item_id = item;
    s.first_window = windows.begin()->first;
    s.counts.assign(
        static_cast<std::size_t>(windows.rbegin()->first - s.first_window + 1),
        0);
    for (const auto& [w, cell] : windows) {
      s.counts[static_cast<std::size_t>(w - s.first_window)] =
          mode == CountMode::kDistinctUsers
              ? static_cast<std::int64_t>(cell.first.size())
              : cell.second;
    }
    out.emplace(item, std::move(s));
  }
  return out;
}

std::vector<UserItemWindow> UserItemWindows(
    const std::vector<InteractionRecord>& records, const WindowConfig& cfg) {
  std::set<UserItemWindow> uniq;
  for (const auto& r : records) {
    uniq.insert({r.user_id, r.item_id, WindowIndex(r.timestamp, cfg)});
  }
  return {uniq.begin(), uniq.end()};
}

SplitSamples MakeSamples(const SeriesMap& series, const MetadataMap& metadata,
                         const DatasetSplit& split) {
  split.Validate();
  SplitSamples out;
  std::set<std::string> warned;
  auto emit = [&](const WindowRange& range, std::vector<Sample>& dst) {
    for (int t = range.first; t <= range.last; ++t) {
      for (const auto& [item, s] : series) {
        if (s.first_window > t) continue;
        Sample sample;
        sample.item_id = item;
        sample.sample_id = MakeSampleId(item, t);
        sample.target_window = t;
        sample.first_window = s.first_window;
        for (int w = s.first_window; w < t; ++w) {
          sample.history.push_back(s.at(w));
        }
        sample.label = s.at(t);
        auto meta = metadata.find(item);
        if (meta != metadata.end()) {
          sample.description_text = meta->second.description_text;
        } else if (warned.insert(item).second) {
          out.warnings.push_back("item " + item +
                                 " has no metadata; using empty description");
        }
        dst.push_back(std::move(sample));
      }
    }
  };
  emit(split.train, out.train);
  emit(split.val, out.val);
  emit(split.test, out.test);
  return out;
}

void CheckLeakageFree(const SplitSamples& samples) {
  auto max_target = [](const std::vector<Sample>& v) {
    int m = 0;
    for (const auto& s : v) m = std::max(m, s.target_window);
    return m;
  };
  auto min_target = [](const std::vector<Sample>& v) {
    int m = INT32_MAX;
    for (const auto& s : v) m = std::min(m, s.target_window);
    return m;
  };
  if (!samples.val.empty() && max_target(samples.train) >= min_target(samples.val)) {
    throw InvariantError("train target windows overlap validation");
  }
  if (!samples.test.empty() &&
      std::max(max_target(samples.train), max_target(samples.val)) >=
          min_target(samples.test)) {
    throw InvariantError("train/validation target windows overlap test");
  }
  for (const auto* v : {&samples.train, &samples.val, &samples.test}) {
    for (const auto& s : *v) {
      const int last_hist = s.first_window + static_cast<int>(s.history.size()) - 1;
      if (last_hist >= s.target_window) {
        throw InvariantError("sample " + s.sample_id +
                             " has history at or after its target window");
      }
    }
  }
}

std::string SampleToJson(const Sample& s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["item_id"] = s.item_id;
  j["target_window"] = s.target_window;
  j["history"] = s.history;
  j["first_window"] = s.first_window;
  j["description_text"] = s.description_text;
  j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
  return j.dump();
}

Sample SampleFromJson(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (!j.is_object()) throw InvariantError("sample line is not a JSON object");
  try {
    Sample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.item_id = j.at("item_id").get<std::string>();
    s.target_window = j.at("target_window").get<int>();
    s.history = j.at("history").get<std::vector<std::int64_t>>();
    s.first_window = j.at("first_window").get<int>();
    s.description_text = j.value("description_text", std::string());
    if (j.contains("label") && !j["label"].is_null()) {
      s.label = j["label"].get<std::int64_t>();
    }
    if (s.first_window + static_cast<int>(s.history.size()) != s.target_window &&
        !(s.history.empty() && s.first_window >= s.target_window)) {
      throw InvariantError("sample " + s.sample_id +
                           ": history length inconsistent with windows");
    }
    return s;
  } catch (const json::exception& e) {
    throw InvariantError(std::string("bad sample record: ") + e.what());
  }
}

void WriteSamples(const std::string& path, const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += SampleToJson(s);
    out += '\n';
  }
  WriteTextFile(path, out);
}

std::vector<Sample> ReadSamples(const std::string& path) {
  std::vector<Sample> out;
  for (const auto& line : SplitLines(ReadTextFile(path))) {
    if (IsBlank(line)) continue;
    out.push_back(SampleFromJson(line));
  }
  return out;
}

void WriteSeries(const std::string& path, const SeriesMap& series) {
  std::string out;
  for (const auto& [item, s] : series) {
    ordered_json j;
    j["item_id"] = item;
    j["first_window"] = s.first_window;
    j["counts"] = s.counts;
    out += j.dump();
    out += '\n';
  }
  WriteTextFile(path, out);
}

SeriesMap ReadSeries(const std::string& path) {
  SeriesMap out;
  for (const auto& line : SplitLines(ReadTextFile(path))) {
    if (IsBlank(line)) continue;
    json j = json::parse(line, nullptr, false);
    try {
      PopularitySeries s;
      s.item_id = j.at("item_id").get<std::string>();
      s.first_window = j.at("first_window").get<int>();
      s.counts = j.at("counts").get<std::vector<std::int64_t>>();
      if (s.counts.empty()) throw InvariantError("empty series for " + s.item_id);
      out.emplace(s.item_id, std::move(s));
    } catch (const json::exception& e) {
      throw InvariantError(std::string("bad series record: ") + e.what());
    }
  }
  return out;
}

}  // namespace trail::ingest
