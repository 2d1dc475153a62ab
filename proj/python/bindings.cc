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

// Python bindings for the core operations. Vectors cross the boundary as
// lists or numpy arrays; samples as the Sample class below.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "trail/common.h"
#include "trail/config.h"
#include "trail/contrastive.h"
#include "trail/eval.h"
#include "trail/ingest.h"
#include "trail/mining.h"
#include "trail/pipeline.h"
#include "trail/scoring.h"
#include "trail/similarity.h"

namespace py = pybind11;

namespace {

using trail::ingest::Sample;

Sample MakeSample(const std::string& item_id, int target_window,
                  std::vector<std::int64_t> history, int first_window,
                  std::string description_text,
                  std::optional<std::int64_t> label) {
  Sample s;
  s.item_id = item_id;
  s.target_window = target_window;
  s.first_window = first_window;
  s.history = std::move(history);
  s.description_text = std::move(description_text);
  s.label = label;
  s.sample_id = trail::ingest::MakeSampleId(item_id, target_window);
  return s;
}

py::dict ExplanationDict(const trail::scoring::ExplanationRecord& e) {
  py::dict d;
  d["trend"] = e.trend_section;
  d["feature"] = e.feature_section;
  d["integration"] = e.integration_section;
  d["feature_tokens"] = e.feature_tokens;
  d["text"] = e.Render();
  return d;
}

py::dict ReportDict(const trail::eval::MetricsReport& r) {
  py::dict d;
  d["hr"] = r.hr;
  d["ndcg"] = r.ndcg;
  d["jaccard"] = r.jaccard;
  d["users"] = r.users;
  d["items"] = r.items;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Popularity prediction toolkit: similarity, mining, contrastive "
            "head, scoring and evaluation.";

  py::register_exception<trail::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<trail::InputError>(m, "InputError", PyExc_FileNotFoundError);
  py::register_exception<trail::InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Sample>(m, "Sample")
      .def(py::init(&MakeSample), py::arg("item_id"), py::arg("target_window"),
           py::arg("history") = std::vector<std::int64_t>{},
           py::arg("first_window") = 1, py::arg("description_text") = "",
           py::arg("label") = std::nullopt)
      .def_readonly("sample_id", &Sample::sample_id)
      .def_readonly("item_id", &Sample::item_id)
      .def_readonly("target_window", &Sample::target_window)
      .def_readonly("first_window", &Sample::first_window)
      .def_readonly("history", &Sample::history)
      .def_readonly("description_text", &Sample::description_text)
      .def_readonly("label", &Sample::label)
      .def("to_json", &trail::ingest::SampleToJson)
      .def("__repr__", [](const Sample& s) { return "<Sample " + s.sample_id + ">"; });

  // similarity
  m.def("dtw_distance", [](const std::vector<double>& a, const std::vector<double>& b) {
    return trail::similarity::DtwDistance(a, b);
  }, py::arg("a"), py::arg("b"));
  m.def("sim_trend", [](const std::vector<double>& a, const std::vector<double>& b) {
    return trail::similarity::SimTrend(a, b);
  }, py::arg("a"), py::arg("b"));
  m.def("change_rate", py::overload_cast<double, double>(&trail::similarity::ChangeRate),
        py::arg("prev"), py::arg("cur"));
  m.def("sim_latest", &trail::similarity::SimLatest, py::arg("r1"), py::arg("r2"),
        py::arg("sigma") = 1.0);
  m.def("embed_text", &trail::similarity::EmbedText, py::arg("text"),
        py::arg("dim") = trail::similarity::kDefaultEmbedDim);
  m.def("sim_meta", [](const std::vector<double>& a, const std::vector<double>& b) {
    return trail::similarity::SimMeta(a, b);
  }, py::arg("e1"), py::arg("e2"));
  m.def("sim_total", [](const Sample& a, const Sample& b, double alpha, double beta,
                        double gamma, double sigma, int dim) {
    trail::similarity::SimilarityWeights w;
    w.alpha = alpha;
    w.beta = beta;
    w.gamma = gamma;
    w.sigma = sigma;
    w.Validate();
    const auto table = trail::similarity::BuildEmbeddings({a, b}, dim);
    const auto s = trail::similarity::SimTotal(a, b, w, table);
    py::dict d;
    d["trend"] = s.trend;
    d["latest"] = s.latest;
    d["meta"] = s.meta;
    d["total"] = s.total;
    return d;
  }, py::arg("a"), py::arg("b"), py::arg("alpha") = 0.4, py::arg("beta") = 0.2,
     py::arg("gamma") = 0.4, py::arg("sigma") = 1.0,
     py::arg("dim") = trail::similarity::kDefaultEmbedDim);

  // mining
  m.def("mine_triplets", [](const std::vector<Sample>& pool, int n_pos,
                            int batch_size, const std::string& pool_mode,
                            std::uint64_t seed, int dim) {
    trail::mining::MiningConfig cfg;
    cfg.n_pos = n_pos;
    cfg.batch_size = batch_size;
    cfg.pool_mode = trail::mining::ParsePoolMode(pool_mode);
    cfg.seed = seed;
    const auto table = trail::similarity::BuildEmbeddings(pool, dim);
    py::list out;
    for (const auto& t : trail::mining::MineTriplets(pool, {}, table, cfg).triplets) {
      py::dict d;
      d["anchor"] = t.anchor;
      d["positives"] = t.positives;
      d["negatives"] = t.negatives;
      out.append(d);
    }
    return out;
  }, py::arg("pool"), py::arg("n_pos") = 2, py::arg("batch_size") = 8,
     py::arg("pool_mode") = "batch", py::arg("seed") = 0,
     py::arg("dim") = trail::similarity::kDefaultEmbedDim);

  // contrastive
  m.def("info_nce", &trail::contrastive::InfoNce, py::arg("anchor"),
        py::arg("positives"), py::arg("negatives"), py::arg("tau") = 0.1);
  m.def("supervised_ce", [](const std::vector<double>& t, const std::vector<double>& p) {
    return trail::contrastive::SupervisedCe(t, p);
  }, py::arg("truth"), py::arg("pred"));
  m.def("combined_loss", &trail::contrastive::CombinedLoss, py::arg("sup"),
        py::arg("con"), py::arg("lam"));

  // scoring
  m.def("score", [](const std::string& scorer, const Sample& s) {
    return trail::scoring::Score(trail::scoring::ScorerSpec::Parse(scorer), s);
  }, py::arg("scorer"), py::arg("sample"));
  m.def("explain", [](const Sample& s, double score, int dim) {
    return ExplanationDict(trail::scoring::Explain(s, score, dim));
  }, py::arg("sample"), py::arg("score"),
     py::arg("dim") = trail::similarity::kDefaultEmbedDim);
  m.def("rank_window", [](const std::map<std::string, double>& scores, std::size_t n) {
    std::vector<trail::scoring::Prediction> preds;
    for (const auto& [item, s] : scores) {
      trail::scoring::Prediction p;
      p.item_id = item;
      p.predicted_score = s;
      preds.push_back(std::move(p));
    }
    std::vector<std::string> out;
    for (const auto& p : trail::scoring::RankWindow(std::move(preds), n)) {
      out.push_back(p.item_id);
    }
    return out;
  }, py::arg("scores"), py::arg("n"));

  // eval
  m.def("evaluate", [](const std::vector<std::string>& ranked,
                       const std::map<std::string, std::set<std::string>>& user_truth,
                       const std::map<std::string, std::int64_t>& item_truth,
                       const std::vector<int>& k_values) {
    trail::eval::EvalRun run{ranked, user_truth, item_truth, k_values};
    return ReportDict(trail::eval::Evaluate(run));
  }, py::arg("ranked_list"), py::arg("user_truth"), py::arg("item_truth"),
     py::arg("k_values") = std::vector<int>{5, 10});

  // command line
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> full = {"trail"};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = trail::pipeline::RunCli(full, out, err, trail::config::ProcessEnv());
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the trail command line; returns (exit_code, stdout, stderr).");
}
