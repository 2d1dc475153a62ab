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

#include "trail/scoring.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "trail/common.h"
#include "trail/similarity.h"

namespace trail::scoring {
namespace {

const std::set<std::string>& StopWords() {
  static const std::set<std::string> kWords = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",   "for",
      "from", "has",  "have", "in",   "is",   "it",   "its",  "of",   "on",
      "or",   "that", "the",  "this", "to",   "was",  "with", "which"};
  return kWords;
}

std::string Num(double v) {
  char buf[48];
  if (std::abs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  }
  return buf;
}

double Param(const ScorerSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

std::string TrendSection(const ingest::Sample& s) {
  if (s.history.empty()) {
    return "There is no historical popularity data before window " +
           std::to_string(s.target_window) +
           ", so the trend cannot be assessed.";
  }
  const auto& h = s.history;
  double sum = 0.0;
  std::size_t peak_at = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum += static_cast<double>(h[i]);
    if (h[i] > h[peak_at]) peak_at = i;
  }
  const double mean = sum / static_cast<double>(h.size());
  std::string text = "The most recent popularity is " +
                     Num(static_cast<double>(h.back())) + " in window " +
                     std::to_string(s.target_window - 1) + ", the average over " +
                     std::to_string(h.size()) + " window" +
                     (h.size() == 1 ? "" : "s") + " is " + Num(mean) +
                     ", and the peak was " +
                     Num(static_cast<double>(h[peak_at])) + " in window " +
                     std::to_string(s.first_window + static_cast<int>(peak_at)) +
                     ".";
  if (h.size() >= 2) {
    const std::size_t k = std::min<std::size_t>(h.size(), kDefaultTrendPoints);
    std::vector<double> x, y;
    for (std::size_t i = h.size() - k; i < h.size(); ++i) {
      x.push_back(static_cast<double>(i));
      y.push_back(static_cast<double>(h[i]));
    }
    const double slope = FitLine(x, y).slope;
    const double tol = 0.05 * std::max(1.0, mean);
    text += slope > tol    ? " Recent windows show a rising trajectory."
            : slope < -tol ? " Recent windows show a declining trajectory."
                           : " Recent windows are roughly flat.";
  }
  return text;
}

std::vector<std::string> PickFeatureTokens(const std::string& text, int dim) {
  const auto tokens = similarity::Tokenize(text);
  const auto emb = similarity::EmbedText(text, dim);
  struct Cand {
    std::string normalized;
    std::string original;
    double weight;
    std::size_t order;
    bool preferred;
  };
  std::vector<Cand> cands;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (!seen.insert(t.normalized).second) continue;
    const bool numeric = std::all_of(t.normalized.begin(), t.normalized.end(),
                                     [](char c) { return c >= '0' && c <= '9'; });
    const bool preferred = t.normalized.size() >= 3 && !numeric &&
                           !StopWords().count(t.normalized);
    const auto th = similarity::HashToken(t.normalized, dim);
    cands.push_back({t.normalized, std::string(t.original),
                     std::abs(emb[th.bucket]), i, preferred});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.preferred != b.preferred) return a.preferred;
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.order < b.order;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cands.size() && out.size() < 2; ++i) {
    out.push_back(cands[i].original);
  }
  return out;
}

}  // namespace

ScorerSpec ScorerSpec::Parse(const std::string& text) {
  ScorerSpec spec;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind == "last_value") {
    spec.kind = ScorerKind::kLastValue;
  } else if (kind == "moving_average") {
    spec.kind = ScorerKind::kMovingAverage;
  } else if (kind == "linear_trend") {
    spec.kind = ScorerKind::kLinearTrend;
  } else {
    throw ConfigError("scorer must be last_value, moving_average or "
                      "linear_trend, got '" + kind + "'");
  }
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string kv;
    while (std::getline(rest, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("scorer parameter '" + kv + "' is not key=value");
      }
      try {
        spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("scorer parameter '" + kv + "' is not numeric");
      }
    }
  }
  spec.Validate();
  return spec;
}

std::string ScorerSpec::ToString() const {
  std::string out = kind == ScorerKind::kLastValue       ? "last_value"
                    : kind == ScorerKind::kMovingAverage ? "moving_average"
                                                         : "linear_trend";
  char sep = ':';
  for (const auto& [k, v] : params) {
    out += sep + k + "=" + Num(v);
    sep = ',';
  }
  return out;
}

void ScorerSpec::Validate() const {
  for (const auto& [k, v] : params) {
    const bool known = (kind == ScorerKind::kMovingAverage && k == "w") ||
                       (kind == ScorerKind::kLinearTrend && k == "points");
    if (!known) throw ConfigError("scorer parameter '" + k + "' not valid here");
    if (!(v >= 1) || v != std::floor(v)) {
      throw ConfigError("scorer parameter '" + k + "' must be a positive integer");
    }
  }
  if (kind == ScorerKind::kLinearTrend && Param(*this, "points", 6) < 2) {
    throw ConfigError("linear_trend needs points >= 2");
  }
}

double Score(const ScorerSpec& spec, const ingest::Sample& sample) {
  const auto& h = sample.history;
  if (h.empty()) return 0.0;
  switch (spec.kind) {
    case ScorerKind::kLastValue:
      return std::max(0.0, static_cast<double>(h.back()));
    case ScorerKind::kMovingAverage: {
      const auto w = static_cast<std::size_t>(
          Param(spec, "w", kDefaultMovingAverageWindow));
      const std::size_t k = std::min(w, h.size());
      double sum = 0.0;
      for (std::size_t i = h.size() - k; i < h.size(); ++i) {
        sum += static_cast<double>(h[i]);
      }
      return std::max(0.0, sum / static_cast<double>(k));
    }
    case ScorerKind::kLinearTrend: {
      const auto p = static_cast<std::size_t>(
          Param(spec, "points", kDefaultTrendPoints));
      const std::size_t k = std::min(p, h.size());
      std::vector<double> x, y;
      for (std::size_t i = h.size() - k; i < h.size(); ++i) {
        x.push_back(static_cast<double>(sample.first_window) +
                    static_cast<double>(i));
        y.push_back(static_cast<double>(h[i]));
      }
      const LineFit fit = FitLine(x, y);
      return std::max(0.0, fit(static_cast<double>(sample.target_window)));
    }
  }
  return 0.0;
}

std::string ExplanationRecord::Render() const {
  return "[Trend]: " + trend_section + " [Feature]: " + feature_section +
         " [Integration]: " + integration_section;
}

ExplanationRecord Explain(const ingest::Sample& sample, double score,
                          int embed_dim) {
  if (!(score >= 0)) throw std::invalid_argument("score must be nonnegative");
  ExplanationRecord e;
  e.trend_section = TrendSection(sample);
  e.feature_tokens = PickFeatureTokens(sample.description_text, embed_dim);
  if (e.feature_tokens.empty()) {
    e.feature_section =
        "The item has no descriptive metadata, so no features can be cited.";
  } else if (e.feature_tokens.size() == 1) {
    e.feature_section = "The description highlights \"" + e.feature_tokens[0] +
                        "\", which shapes expected interest.";
  } else {
    e.feature_section = "The description highlights \"" + e.feature_tokens[0] +
                        "\" and \"" + e.feature_tokens[1] +
                        "\", which shape expected interest.";
  }
  const bool trend_dominates =
      sample.history.size() >= kTrendDominanceMinHistory;
  e.integration_section =
      "Combining the trend and the features, the predicted score for window " +
      std::to_string(sample.target_window) + " is " + Num(score) + "; " +
      (trend_dominates
           ? "the historical trend dominates this estimate."
           : "with little or no history, the item features dominate this "
             "estimate.");
  return e;
}

std::vector<Prediction> RankWindow(std::vector<Prediction> predictions,
                                   std::size_t n) {
  std::set<std::string> items;
  for (const auto& p : predictions) {
    if (!items.insert(p.item_id).second) {
      throw std::invalid_argument("duplicate item in ranking: " + p.item_id);
    }
  }
  std::sort(predictions.begin(), predictions.end(),
            [](const Prediction& a, const Prediction& b) {
              if (a.predicted_score != b.predicted_score) {
                return a.predicted_score > b.predicted_score;
              }
              return a.item_id < b.item_id;
            });
  if (predictions.size() > n) predictions.resize(n);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    predictions[i].rank = static_cast<int>(i) + 1;
  }
  return predictions;
}

std::string PredictionToJson(const Prediction& p) {
  nlohmann::ordered_json j;
  j["sample_id"] = p.sample_id;
  j["predict_popularity_score"] = p.predicted_score;
  j["explanation_of_score"] = p.explanation.Render();
  return j.dump();
}

std::map<std::string, double> ParseScoreFile(const std::string& text) {
  std::map<std::string, double> out;
  const auto lines = SplitLines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "score line " + std::to_string(n + 1);
    auto j = nlohmann::json::parse(lines[n], nullptr, false);
    if (!j.is_object() || !j.contains("sample_id") || !j.contains("score") ||
        !j["sample_id"].is_string() || !j["score"].is_number()) {
      throw InvariantError(where + ": expected {sample_id, score}");
    }
    const double s = j["score"].get<double>();
    if (!(s >= 0) || !std::isfinite(s)) {
      throw InvariantError(where + ": score must be finite and nonnegative");
    }
    if (!out.emplace(j["sample_id"].get<std::string>(), s).second) {
      throw InvariantError(where + ": duplicate sample_id");
    }
  }
  return out;
}

std::map<std::string, double> LoadScoreFile(const std::string& path) {
  return ParseScoreFile(ReadTextFile(path));
}

void CheckScoreCoverage(const std::map<std::string, double>& scores,
                        const std::vector<ingest::Sample>& samples) {
  for (const auto& s : samples) {
    if (!scores.count(s.sample_id)) {
      throw InvariantError("score file has no score for sample " + s.sample_id);
    }
  }
}

std::string ScoreToJson(const std::string& sample_id, double score) {
  nlohmann::ordered_json j;
  j["sample_id"] = sample_id;
  j["score"] = score;
  return j.dump();
}

std::string RankedListTsv(const std::vector<Prediction>& ranked) {
  std::string out = "rank\titem_id\tscore\n";
  char buf[48];
  for (const auto& p : ranked) {
    std::snprintf(buf, sizeof(buf), "%.10g", p.predicted_score);
    out += std::to_string(p.rank) + '\t' + p.item_id + '\t' + buf + '\n';
  }
  return out;
}

std::vector<RankedEntry> ParseRankedListTsv(const std::string& text) {
  std::vector<RankedEntry> out;
  const auto lines = SplitLines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty() || (n == 0 && lines[n].rfind("rank\t", 0) == 0)) {
      continue;
    }
    std::stringstream row(lines[n]);
    std::string rank, item, score;
    if (!std::getline(row, rank, '\t') || !std::getline(row, item, '\t') ||
        !std::getline(row, score, '\t')) {
      throw InvariantError("ranked list line " + std::to_string(n + 1) +
                           " needs rank, item_id and score");
    }
    try {
      out.push_back({std::stoi(rank), item, std::stod(score)});
    } catch (const std::exception&) {
      throw InvariantError("ranked list line " + std::to_string(n + 1) +
                           " is not numeric");
    }
  }
  return out;
}

}  // namespace trail::scoring
