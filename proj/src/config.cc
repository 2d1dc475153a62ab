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

#include "trail/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "trail/common.h"

namespace trail::config {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Bad(const std::string& key, const std::string& value,
                      const std::string& expected) {
  throw ConfigError("config key '" + key + "': expected " + expected +
                    ", got '" + value + "'");
}

long long ToInt(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  Bad(key, v, "an integer");
}

double ToDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  Bad(key, v, "a number");
}

bool ToBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Bad(key, v, "true or false");
}

std::optional<ingest::WindowRange> ToRange(const std::string& key,
                                           const std::string& v) {
  if (v == "auto") return std::nullopt;
  const auto dash = v.find('-');
  ingest::WindowRange r;
  if (dash == std::string::npos) {
    r.first = r.last = static_cast<int>(ToInt(key, v));
  } else {
    r.first = static_cast<int>(ToInt(key, Trim(v.substr(0, dash))));
    r.last = static_cast<int>(ToInt(key, Trim(v.substr(dash + 1))));
  }
  if (r.first < 1 || r.last < r.first) Bad(key, v, "a window range like 1-9");
  return r;
}

std::string RangeStr(const std::optional<ingest::WindowRange>& r) {
  if (!r) return "auto";
  return std::to_string(r->first) + "-" + std::to_string(r->last);
}

// Shortest text that parses back to the same double.
std::string Dbl(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

struct KeyDef {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define TRAIL_STR_KEY(name)                                                  \
  {                                                                          \
    #name, {                                                                 \
      [](PipelineConfig& c, const std::string& v) { c.name = v; },           \
          [](const PipelineConfig& c) { return c.name; }                     \
    }                                                                        \
  }
#define TRAIL_INT_KEY(name)                                                  \
  {                                                                          \
    #name, {                                                                 \
      [](PipelineConfig& c, const std::string& v) {                          \
        c.name = static_cast<decltype(c.name)>(ToInt(#name, v));             \
      },                                                                     \
          [](const PipelineConfig& c) { return std::to_string(c.name); }     \
    }                                                                        \
  }
#define TRAIL_DBL_KEY(name, field)                                           \
  {                                                                          \
    #name, {                                                                 \
      [](PipelineConfig& c, const std::string& v) {                          \
        c.field = ToDouble(#name, v);                                        \
      },                                                                     \
          [](const PipelineConfig& c) { return Dbl(c.field); }               \
    }                                                                        \
  }
#define TRAIL_RANGE_KEY(name)                                                \
  {                                                                          \
    #name, {                                                                 \
      [](PipelineConfig& c, const std::string& v) {                          \
        c.name = ToRange(#name, v);                                          \
      },                                                                     \
          [](const PipelineConfig& c) { return RangeStr(c.name); }           \
    }                                                                        \
  }

const std::map<std::string, KeyDef>& Keys() {
  static const std::map<std::string, KeyDef> kKeys = {
      TRAIL_STR_KEY(interactions),
      TRAIL_STR_KEY(metadata),
      TRAIL_STR_KEY(embeddings),
      TRAIL_STR_KEY(score_file),
      TRAIL_STR_KEY(out),
      {"interactions_format",
       {[](PipelineConfig& c, const std::string& v) {
          c.interactions_format = ingest::ParseLogFormat(v);
        },
        [](const PipelineConfig& c) {
          return std::string(c.interactions_format == ingest::LogFormat::kCsv
                                 ? "csv"
                                 : "jsonl");
        }}},
      TRAIL_INT_KEY(window_days),
      {"origin",
       {[](PipelineConfig& c, const std::string& v) {
          if (v == "auto") {
            c.origin.reset();
          } else {
            c.origin = ToInt("origin", v);
          }
        },
        [](const PipelineConfig& c) {
          return c.origin ? std::to_string(*c.origin) : std::string("auto");
        }}},
      {"count_mode",
       {[](PipelineConfig& c, const std::string& v) {
          if (v == "distinct_users") {
            c.count_mode = ingest::CountMode::kDistinctUsers;
          } else if (v == "events") {
            c.count_mode = ingest::CountMode::kEvents;
          } else {
            Bad("count_mode", v, "distinct_users or events");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.count_mode == ingest::CountMode::kEvents
                                 ? "events"
                                 : "distinct_users");
        }}},
      TRAIL_RANGE_KEY(train_windows),
      TRAIL_RANGE_KEY(val_windows),
      TRAIL_RANGE_KEY(test_windows),
      {"strict",
       {[](PipelineConfig& c, const std::string& v) {
          c.strict = ToBool("strict", v);
        },
        [](const PipelineConfig& c) {
          return std::string(c.strict ? "true" : "false");
        }}},
      TRAIL_DBL_KEY(alpha, weights.alpha),
      TRAIL_DBL_KEY(beta, weights.beta),
      TRAIL_DBL_KEY(gamma, weights.gamma),
      TRAIL_DBL_KEY(sigma, weights.sigma),
      {"normalize_trend",
       {[](PipelineConfig& c, const std::string& v) {
          c.weights.normalize_trend = ToBool("normalize_trend", v);
        },
        [](const PipelineConfig& c) {
          return std::string(c.weights.normalize_trend ? "true" : "false");
        }}},
      TRAIL_INT_KEY(embed_dim),
      TRAIL_INT_KEY(n_pos),
      {"pool_mode",
       {[](PipelineConfig& c, const std::string& v) {
          c.pool_mode = mining::ParsePoolMode(v);
        },
        [](const PipelineConfig& c) {
          return std::string(c.pool_mode == mining::PoolMode::kGlobal ? "global"
                                                                      : "batch");
        }}},
      TRAIL_INT_KEY(batch_size),
      TRAIL_INT_KEY(global_negatives),
      TRAIL_DBL_KEY(tau, tau),
      TRAIL_DBL_KEY(lambda, lambda),
      TRAIL_DBL_KEY(dropout_rate, dropout_rate),
      TRAIL_DBL_KEY(learning_rate, learning_rate),
      TRAIL_INT_KEY(epochs),
      TRAIL_INT_KEY(hidden_dim),
      TRAIL_INT_KEY(out_dim),
      {"scorer",
       {[](PipelineConfig& c, const std::string& v) {
          c.scorer = scoring::ScorerSpec::Parse(v);
        },
        [](const PipelineConfig& c) { return c.scorer.ToString(); }}},
      {"top_n",
       {[](PipelineConfig& c, const std::string& v) {
          const long long n = ToInt("top_n", v);
          if (n < 0) Bad("top_n", v, "a nonnegative integer");
          c.top_n = static_cast<std::size_t>(n);
        },
        [](const PipelineConfig& c) { return std::to_string(c.top_n); }}},
      {"k_values",
       {[](PipelineConfig& c, const std::string& v) {
          std::vector<int> ks;
          std::stringstream in(v);
          std::string part;
          while (std::getline(in, part, ',')) {
            ks.push_back(static_cast<int>(ToInt("k_values", Trim(part))));
          }
          if (ks.empty()) Bad("k_values", v, "a comma-separated list");
          c.k_values = ks;
        },
        [](const PipelineConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.k_values.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(c.k_values[i]);
          }
          return s;
        }}},
      {"truth_filter",
       {[](PipelineConfig& c, const std::string& v) {
          if (v == "all") {
            c.truth_filter = TruthFilter::kAll;
          } else if (v == "cold") {
            c.truth_filter = TruthFilter::kCold;
          } else if (v == "warm") {
            c.truth_filter = TruthFilter::kWarm;
          } else {
            Bad("truth_filter", v, "all, cold or warm");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.truth_filter == TruthFilter::kCold   ? "cold"
                             : c.truth_filter == TruthFilter::kWarm ? "warm"
                                                                    : "all");
        }}},
      {"seed",
       {[](PipelineConfig& c, const std::string& v) {
          const long long s = ToInt("seed", v);
          if (s < 0) Bad("seed", v, "a nonnegative integer");
          c.seed = static_cast<std::uint64_t>(s);
        },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
      TRAIL_INT_KEY(threads),
  };
  return kKeys;
}

#undef TRAIL_STR_KEY
#undef TRAIL_INT_KEY
#undef TRAIL_DBL_KEY
#undef TRAIL_RANGE_KEY

}  // namespace

const std::vector<std::string>& KnownKeys() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : Keys()) v.push_back(k);
    return v;
  }();
  return kNames;
}

void SetKey(PipelineConfig& cfg, const std::string& key,
            const std::string& value) {
  auto it = Keys().find(key);
  if (it == Keys().end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(cfg, Trim(value));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.find("'" + key + "'") != std::string::npos) throw;
    throw ConfigError("config key '" + key + "': " + msg);
  }
}

std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  const auto lines = SplitLines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string line = lines[n];
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(n + 1) +
                        " is not key = value");
    }
    out[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  return out;
}

std::string EnvName(const std::string& key) {
  std::string name = "TRAIL_";
  for (char c : key) name.push_back(static_cast<char>(std::toupper(c)));
  return name;
}

EnvLookup ProcessEnv() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

PipelineConfig Load(const std::string& path, const EnvLookup& env,
                    const std::map<std::string, std::string>& overrides) {
  PipelineConfig cfg;
  if (!path.empty()) {
    for (const auto& [k, v] : ParseKeyValues(ReadTextFile(path))) {
      SetKey(cfg, k, v);
    }
  }
  if (env) {
    for (const auto& key : KnownKeys()) {
      if (auto v = env(EnvName(key))) SetKey(cfg, key, *v);
    }
  }
  for (const auto& [k, v] : overrides) SetKey(cfg, k, v);
  cfg.Validate();
  return cfg;
}

void PipelineConfig::Validate() const {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("config key '" + key + "': " + what);
  };
  require(window_days >= 1, "window_days", "must be >= 1");
  require(!origin || *origin >= 0, "origin", "must be >= 0");
  require(embed_dim >= 8, "embed_dim", "must be >= 8");
  require(n_pos >= 1, "n_pos", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(pool_mode != mining::PoolMode::kBatch || batch_size >= n_pos + 1,
          "batch_size", "must be at least n_pos + 1");
  require(global_negatives >= 1, "global_negatives", "must be >= 1");
  require(weights.alpha >= 0, "alpha", "must be >= 0");
  require(weights.beta >= 0, "beta", "must be >= 0");
  require(weights.gamma >= 0, "gamma", "must be >= 0");
  require(weights.alpha + weights.beta + weights.gamma > 0, "alpha",
          "alpha + beta + gamma must be positive");
  require(weights.sigma > 0, "sigma", "must be positive");
  require(tau > 0, "tau", "must be positive");
  require(lambda >= 0, "lambda", "must be >= 0");
  require(dropout_rate >= 0 && dropout_rate < 1, "dropout_rate",
          "must be in [0, 1)");
  require(learning_rate > 0, "learning_rate", "must be positive");
  require(epochs >= 0, "epochs", "must be >= 0");
  require(hidden_dim >= 1, "hidden_dim", "must be >= 1");
  require(out_dim >= 1, "out_dim", "must be >= 1");
  require(threads >= 1, "threads", "must be >= 1");
  require(!k_values.empty(), "k_values", "must not be empty");
  for (int k : k_values) require(k >= 1, "k_values", "entries must be >= 1");
  const int given = (train_windows ? 1 : 0) + (val_windows ? 1 : 0) +
                    (test_windows ? 1 : 0);
  require(given == 0 || given == 3, "train_windows",
          "train/val/test windows must be all set or all auto");
  if (given == 3) {
    ingest::DatasetSplit split{*train_windows, *val_windows, *test_windows};
    try {
      split.Validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'train_windows': ") + e.what());
    }
  }
  scorer.Validate();
}

std::string PipelineConfig::Serialize() const {
  std::string out;
  for (const auto& [k, def] : Keys()) out += k + " = " + def.get(*this) + "\n";
  return out;
}

mining::MiningConfig PipelineConfig::Mining() const {
  mining::MiningConfig m;
  m.pool_mode = pool_mode;
  m.batch_size = batch_size;
  m.n_pos = n_pos;
  m.global_negatives = global_negatives;
  m.seed = seed + kMineSeedOffset;
  m.threads = threads;
  return m;
}

contrastive::TrainConfig PipelineConfig::Training() const {
  contrastive::TrainConfig t;
  t.tau = tau;
  t.epochs = epochs;
  t.learning_rate = learning_rate;
  t.seed = seed + kTrainSeedOffset;
  t.threads = threads;
  return t;
}

}  // namespace trail::config
