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

#include "trail/pipeline.h"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "trail/common.h"
#include "trail/contrastive.h"
#include "trail/eval.h"
#include "trail/ingest.h"
#include "trail/mining.h"
#include "trail/scoring.h"
#include "trail/similarity.h"
#include "trail/synthetic.h"

namespace trail::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

class Stage {
 public:
  Stage(std::string name, const config::PipelineConfig& cfg, std::ostream& log)
      : name_(std::move(name)), cfg_(cfg), log_(log), dir_(cfg.out) {
    fs::create_directories(dir_);
    WriteTextFile(Path("config." + name_ + ".txt"), cfg_.Serialize());
    Log("effective config written to config." + name_ + ".txt");
  }

  std::string Path(const std::string& file) const {
    return (dir_ / file).string();
  }

  // Reads an input file and logs its content fingerprint.
  std::string Read(const std::string& path) {
    const std::string text = ReadTextFile(path);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, Fnv1a64(text));
    Log("input " + path + " fnv1a64=" + buf);
    return text;
  }
  std::string ReadArtifact(const char* file) { return Read(Path(file)); }

  void Write(const char* file, const std::string& text) {
    WriteTextFile(Path(file), text);
    Log("wrote " + Path(file));
  }

  void Log(const std::string& msg) { log_ << "[trail " << name_ << "] " << msg << "\n"; }

  const config::PipelineConfig& cfg() const { return cfg_; }

 private:
  std::string name_;
  const config::PipelineConfig& cfg_;
  std::ostream& log_;
  fs::path dir_;
};

std::vector<ingest::Sample> ParseSampleLines(const std::string& text) {
  std::vector<ingest::Sample> out;
  for (const auto& line : SplitLines(text)) {
    if (!line.empty()) out.push_back(ingest::SampleFromJson(line));
  }
  return out;
}

std::string JoinSamples(const std::vector<ingest::Sample>& v) {
  std::string out;
  for (const auto& s : v) out += ingest::SampleToJson(s) + "\n";
  return out;
}

// --- ingest -----------------------------------------------------------------

void RunIngest(Stage& st) {
  const auto& cfg = st.cfg();
  if (cfg.interactions.empty()) {
    throw ConfigError("config key 'interactions': required by ingest");
  }
  const auto parsed = ingest::ParseInteractionsText(
      st.Read(cfg.interactions), cfg.interactions_format, cfg.strict);
  if (parsed.malformed_count > 0) {
    st.Log("warning: " + std::to_string(parsed.malformed_count) +
           " malformed line(s) skipped");
  }
  ingest::MetadataMap metadata;
  if (!cfg.metadata.empty()) {
    metadata = ingest::ParseMetadataText(st.Read(cfg.metadata));
  }
  ingest::WindowConfig wc;
  wc.window_days = cfg.window_days;
  wc.origin = cfg.origin ? *cfg.origin : ingest::DefaultOrigin(parsed.records);
  for (const auto& r : parsed.records) {
    if (r.timestamp < wc.origin) {
      throw ConfigError("config key 'origin': " + std::to_string(wc.origin) +
                        " is after the earliest event " +
                        std::to_string(r.timestamp));
    }
  }
  const auto series = ingest::BuildSeries(parsed.records, wc, cfg.count_mode);
  const auto uiw = ingest::UserItemWindows(parsed.records, wc);

  int max_window = 0;
  for (const auto& [_, s] : series) max_window = std::max(max_window, s.last_window());
  std::set<std::string> users;
  for (const auto& r : parsed.records) users.insert(r.user_id);

  std::string series_text;
  for (const auto& [item, s] : series) {
    ordered_json j;
    j["item_id"] = item;
    j["first_window"] = s.first_window;
    j["counts"] = s.counts;
    series_text += j.dump() + "\n";
  }
  st.Write(files::kSeries, series_text);

  std::string meta_text;
  for (const auto& [item, m] : metadata) {
    ordered_json j;
    j["item_id"] = item;
    j["description_text"] = m.description_text;
    j["attributes"] = m.attributes;
    meta_text += j.dump() + "\n";
  }
  st.Write(files::kMetadata, meta_text);

  std::string uiw_text = "user_id\titem_id\twindow\n";
  for (const auto& u : uiw) {
    uiw_text += u.user_id + '\t' + u.item_id + '\t' + std::to_string(u.window) + '\n';
  }
  st.Write(files::kUserItemWindows, uiw_text);

  ordered_json summary;
  summary["origin"] = wc.origin;
  summary["window_days"] = wc.window_days;
  summary["count_mode"] =
      cfg.count_mode == ingest::CountMode::kEvents ? "events" : "distinct_users";
  summary["records"] = parsed.records.size();
  summary["malformed"] = parsed.malformed_count;
  summary["items"] = series.size();
  summary["users"] = users.size();
  summary["max_window"] = max_window;
  st.Write(files::kIngestSummary, summary.dump(2) + "\n");
}

// --- split ------------------------------------------------------------------

ingest::DatasetSplit ResolveSplit(const config::PipelineConfig& cfg,
                                  int max_window) {
  if (cfg.train_windows) {
    return {*cfg.train_windows, *cfg.val_windows, *cfg.test_windows};
  }
  return ingest::DefaultSplit(max_window);
}

json RangeJson(const ingest::WindowRange& r) { return json::array({r.first, r.last}); }

void RunSplit(Stage& st) {
  const json summary = json::parse(st.ReadArtifact(files::kIngestSummary));
  const int max_window = summary.at("max_window").get<int>();
  ingest::SeriesMap series;
  for (const auto& line : SplitLines(st.ReadArtifact(files::kSeries))) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    ingest::PopularitySeries s;
    s.item_id = j.at("item_id").get<std::string>();
    s.first_window = j.at("first_window").get<int>();
    s.counts = j.at("counts").get<std::vector<std::int64_t>>();
    series.emplace(s.item_id, std::move(s));
  }
  const auto metadata = ingest::ParseMetadataText(st.ReadArtifact(files::kMetadata));
  const auto split = ResolveSplit(st.cfg(), max_window);
  const auto samples = ingest::MakeSamples(series, metadata, split);
  for (const auto& w : samples.warnings) st.Log("warning: " + w);
  ingest::CheckLeakageFree(samples);

  st.Write(files::kSamplesTrain, JoinSamples(samples.train));
  st.Write(files::kSamplesVal, JoinSamples(samples.val));
  st.Write(files::kSamplesTest, JoinSamples(samples.test));
  ordered_json j;
  j["train"] = RangeJson(split.train);
  j["val"] = RangeJson(split.val);
  j["test"] = RangeJson(split.test);
  j["counts"] = {{"train", samples.train.size()},
                 {"val", samples.val.size()},
                 {"test", samples.test.size()}};
  st.Write(files::kSplit, j.dump(2) + "\n");
}

// --- similarity -------------------------------------------------------------

struct AllSamples {
  std::vector<ingest::Sample> train, val, test;
};

AllSamples ReadAllSamples(Stage& st) {
  return {ParseSampleLines(st.ReadArtifact(files::kSamplesTrain)),
          ParseSampleLines(st.ReadArtifact(files::kSamplesVal)),
          ParseSampleLines(st.ReadArtifact(files::kSamplesTest))};
}

similarity::EmbeddingTable ReadItemEmbeddings(Stage& st) {
  return similarity::ParseEmbeddings(st.ReadArtifact(files::kItemEmbeddings));
}

void RunSimilarity(Stage& st) {
  const auto& cfg = st.cfg();
  const AllSamples all = ReadAllSamples(st);
  std::vector<ingest::Sample> every = all.train;
  every.insert(every.end(), all.val.begin(), all.val.end());
  every.insert(every.end(), all.test.begin(), all.test.end());

  similarity::EmbeddingTable table;
  if (!cfg.embeddings.empty()) {
    table = similarity::ParseEmbeddings(st.Read(cfg.embeddings));
    for (const auto& s : every) {
      if (!table.count(s.item_id)) {
        throw InvariantError("embeddings file has no vector for item " + s.item_id);
      }
    }
  } else {
    table = similarity::BuildEmbeddings(every, cfg.embed_dim);
  }
  std::string emb_text;
  for (const auto& [item, v] : table) {
    ordered_json j;
    j["item_id"] = item;
    j["vector"] = v;
    emb_text += j.dump() + "\n";
  }
  st.Write(files::kItemEmbeddings, emb_text);

  const auto& pool = all.train;
  std::vector<std::string> rows(pool.size());
  ParallelFor(pool.size(), cfg.threads, [&](std::size_t i) {
    std::string& r = rows[i];
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const auto s = similarity::SimTotal(pool[i], pool[j], cfg.weights, table);
      r += similarity::PairwiseTsvRow(pool[i].sample_id, pool[j].sample_id, s);
      r += '\n';
    }
  });
  std::string tsv = similarity::PairwiseTsvHeader() + "\n";
  for (const auto& r : rows) tsv += r;
  st.Write(files::kSimilarity, tsv);
}

// --- mine -------------------------------------------------------------------

void RunMine(Stage& st) {
  const auto& cfg = st.cfg();
  const auto train = ParseSampleLines(st.ReadArtifact(files::kSamplesTrain));
  const auto table = ReadItemEmbeddings(st);
  const auto result =
      mining::MineTriplets(train, cfg.weights, table, cfg.Mining());
  for (const auto& w : result.warnings) st.Log("warning: " + w);
  std::string text;
  for (const auto& t : result.triplets) text += mining::TripletToJson(t) + "\n";
  st.Log(std::to_string(result.triplets.size()) + " triplets");
  st.Write(files::kTriplets, text);
}

// --- train-head -------------------------------------------------------------

std::vector<double> ScoresFor(const scoring::ScorerSpec& spec,
                              const std::vector<ingest::Sample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(scoring::Score(spec, s));
  return out;
}

void RunTrainHead(Stage& st) {
  const auto& cfg = st.cfg();
  std::vector<mining::Triplet> triplets;
  for (const auto& line : SplitLines(st.ReadArtifact(files::kTriplets))) {
    if (!line.empty()) triplets.push_back(mining::TripletFromJson(line));
  }
  const auto train = ParseSampleLines(st.ReadArtifact(files::kSamplesTrain));
  const auto val = ParseSampleLines(st.ReadArtifact(files::kSamplesVal));
  const auto table = ReadItemEmbeddings(st);
  if (table.empty()) throw InvariantError("item embedding table is empty");

  const auto standardizer = contrastive::FeatureStandardizer::Fit(train);
  const auto raw = contrastive::BuildRawEmbeddings(train, table, standardizer);
  const int d_in = static_cast<int>(table.begin()->second.size()) +
                   contrastive::kTrendFeatureCount;
  const auto head = contrastive::ProjectionHead::Init(
      d_in, cfg.hidden_dim, cfg.out_dim, cfg.dropout_rate,
      cfg.seed + config::kHeadInitSeedOffset);
  const auto result = contrastive::TrainHead(head, triplets, raw, cfg.Training());

  st.Write(files::kHead, contrastive::HeadToJson(result.head) + "\n");
  st.Write(files::kLossTrace, contrastive::LossTraceCsv(result.loss_trace));

  ordered_json summary;
  summary["triplets"] = triplets.size();
  summary["epochs"] = cfg.epochs;
  summary["initial_loss"] =
      result.loss_trace.empty() ? result.final_loss : result.loss_trace.front();
  summary["final_loss"] = result.final_loss;
  summary["lambda"] = cfg.lambda;
  if (!val.empty()) {
    std::vector<double> labels;
    for (const auto& s : val) labels.push_back(static_cast<double>(s.label.value_or(0)));
    const auto truth = contrastive::NormalizeCounts(labels);
    const auto pred = contrastive::Softmax(ScoresFor(cfg.scorer, val));
    const double sup = contrastive::SupervisedCe(truth, pred);
    summary["supervised_ce_val"] = sup;
    summary["combined_loss"] =
        contrastive::CombinedLoss(sup, result.final_loss, cfg.lambda);
  } else {
    summary["supervised_ce_val"] = nullptr;
    summary["combined_loss"] = nullptr;
  }
  st.Write(files::kTrainSummary, summary.dump(2) + "\n");
}

// --- score / explain / evaluate ---------------------------------------------

int SingleTestWindow(const std::vector<ingest::Sample>& test) {
  if (test.empty()) throw InvariantError("no test samples");
  const int t = test.front().target_window;
  for (const auto& s : test) {
    if (s.target_window != t) {
      throw ConfigError(
          "config key 'test_windows': score and evaluate need a single test "
          "window");
    }
  }
  return t;
}

std::map<std::string, double> ResolveScores(
    Stage& st, const std::vector<ingest::Sample>& test) {
  const auto& cfg = st.cfg();
  std::map<std::string, double> scores;
  if (!cfg.score_file.empty()) {
    scores = scoring::ParseScoreFile(st.Read(cfg.score_file));
    scoring::CheckScoreCoverage(scores, test);
  } else {
    for (const auto& s : test) scores[s.sample_id] = scoring::Score(cfg.scorer, s);
  }
  return scores;
}

std::vector<scoring::Prediction> Rank(const std::vector<ingest::Sample>& test,
                                      const std::map<std::string, double>& scores,
                                      std::size_t top_n) {
  std::vector<scoring::Prediction> preds;
  for (const auto& s : test) {
    scoring::Prediction p;
    p.sample_id = s.sample_id;
    p.item_id = s.item_id;
    p.predicted_score = scores.at(s.sample_id);
    preds.push_back(std::move(p));
  }
  return scoring::RankWindow(std::move(preds), top_n == 0 ? test.size() : top_n);
}

void RunScore(Stage& st) {
  const auto test = ParseSampleLines(st.ReadArtifact(files::kSamplesTest));
  SingleTestWindow(test);
  const auto scores = ResolveScores(st, test);
  std::string text;
  for (const auto& s : test) {
    text += scoring::ScoreToJson(s.sample_id, scores.at(s.sample_id)) + "\n";
  }
  st.Write(files::kScores, text);
  st.Write(files::kRanked, scoring::RankedListTsv(Rank(test, scores, st.cfg().top_n)));
}

void RunExplain(Stage& st) {
  const auto& cfg = st.cfg();
  const auto test = ParseSampleLines(st.ReadArtifact(files::kSamplesTest));
  const auto scores = scoring::ParseScoreFile(st.ReadArtifact(files::kScores));
  scoring::CheckScoreCoverage(scores, test);
  std::map<std::string, const ingest::Sample*> by_id;
  for (const auto& s : test) by_id[s.sample_id] = &s;
  auto ranked = Rank(test, scores, test.size());
  std::string text;
  for (auto& p : ranked) {
    p.explanation =
        scoring::Explain(*by_id.at(p.sample_id), p.predicted_score, cfg.embed_dim);
    text += scoring::PredictionToJson(p) + "\n";
  }
  st.Write(files::kPredictions, text);
}

void RunEvaluate(Stage& st) {
  const auto& cfg = st.cfg();
  const auto test = ParseSampleLines(st.ReadArtifact(files::kSamplesTest));
  const int window = SingleTestWindow(test);

  eval::EvalRun run;
  run.k_values = cfg.k_values;
  if (!cfg.score_file.empty()) {
    for (const auto& p : Rank(test, ResolveScores(st, test), cfg.top_n)) {
      run.ranked_list.push_back(p.item_id);
    }
  } else {
    for (const auto& e :
         scoring::ParseRankedListTsv(st.ReadArtifact(files::kRanked))) {
      run.ranked_list.push_back(e.item_id);
    }
  }
  std::map<std::string, bool> cold;
  for (const auto& s : test) {
    run.item_truth[s.item_id] = s.label.value_or(0);
    cold[s.item_id] = s.cold_start();
  }
  const auto lines = SplitLines(st.ReadArtifact(files::kUserItemWindows));
  for (std::size_t n = 1; n < lines.size(); ++n) {
    std::stringstream row(lines[n]);
    std::string user, item, w;
    if (!std::getline(row, user, '\t') || !std::getline(row, item, '\t') ||
        !std::getline(row, w)) {
      throw InvariantError("bad user_item_windows line " + std::to_string(n + 1));
    }
    if (std::stoi(w) != window) continue;
    auto c = cold.find(item);
    if (c == cold.end()) continue;
    if (cfg.truth_filter == config::TruthFilter::kCold && !c->second) continue;
    if (cfg.truth_filter == config::TruthFilter::kWarm && c->second) continue;
    run.user_truth[user].insert(item);
  }
  const auto report = eval::Evaluate(run);
  st.Write(files::kMetrics, report.ToJson());
}

using StageFn = void (*)(Stage&);

const std::vector<std::pair<std::string, StageFn>>& Stages() {
  static const std::vector<std::pair<std::string, StageFn>> kStages = {
      {"ingest", RunIngest},     {"split", RunSplit},
      {"similarity", RunSimilarity}, {"mine", RunMine},
      {"train-head", RunTrainHead},  {"score", RunScore},
      {"explain", RunExplain},   {"evaluate", RunEvaluate},
  };
  return kStages;
}

int Synth(const std::string& out_dir, const synthetic::CorpusSpec& spec,
          std::ostream& out) {
  fs::create_directories(out_dir);
  const auto corpus = synthetic::Generate(spec);
  const auto inter = (fs::path(out_dir) / "interactions.jsonl").string();
  const auto meta = (fs::path(out_dir) / "metadata.jsonl").string();
  WriteTextFile(inter, synthetic::InteractionsJsonl(corpus));
  WriteTextFile(meta, synthetic::MetadataJsonl(corpus));
  out << "wrote " << inter << " and " << meta << "\nplanted:";
  for (const auto& p : corpus.planted_items) out << ' ' << p;
  out << "\n";
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& StageNames() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : Stages()) v.push_back(name);
    return v;
  }();
  return kNames;
}

void RunStage(const std::string& name, const config::PipelineConfig& cfg,
              std::ostream& log) {
  if (name == "run-all") {
    for (const auto& [stage, fn] : Stages()) {
      Stage st(stage, cfg, log);
      fn(st);
    }
    return;
  }
  for (const auto& [stage, fn] : Stages()) {
    if (stage == name) {
      Stage st(stage, cfg, log);
      fn(st);
      return;
    }
  }
  throw ConfigError("unknown subcommand '" + name + "'");
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err, const config::EnvLookup& env) {
  CLI::App app{"Popularity trend toolkit: ingest, similarity, mining, "
               "contrastive head, scoring and evaluation"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 0;
  bool strict = false;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--out", out_dir, "output directory (config key 'out')");
  app.add_option("--threads", threads, "worker threads (config key 'threads')");
  app.add_flag("--strict", strict, "fail on malformed interaction lines");
  app.add_option("--set", sets, "override a config key: --set key=value");

  std::vector<std::string> names = StageNames();
  names.push_back("run-all");
  for (const auto& n : names) {
    app.add_subcommand(n, n == "run-all" ? "run every stage in order"
                                         : "run the " + n + " stage")
        ->fallthrough();
  }
  synthetic::CorpusSpec spec;
  std::string synth_out = "synthetic";
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  synth->add_option("--dir", synth_out, "directory for the corpus files");
  synth->add_option("--items", spec.items);
  synth->add_option("--windows", spec.windows);
  synth->add_option("--planted", spec.planted);
  synth->add_option("--users", spec.users);
  synth->add_option("--seed", spec.seed);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return Synth(synth_out, spec, out);

    std::map<std::string, std::string> overrides;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      }
      overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!out_dir.empty()) overrides["out"] = out_dir;
    if (threads > 0) overrides["threads"] = std::to_string(threads);
    if (strict) overrides["strict"] = "true";
    const auto cfg = config::Load(config_path, env, overrides);
    RunStage(app.get_subcommands().front()->get_name(), cfg, err);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const json::exception& e) {
    err << "invariant violation: malformed artifact: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace trail::pipeline
