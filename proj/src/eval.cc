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

#include "trail/eval.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace trail::eval {
namespace {

void CheckK(int k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
}

void RequireUsers(const EvalRun& run) {
  if (EvaluableUsers(run) == 0) {
    throw std::invalid_argument("no users with test-window interactions");
  }
}

std::vector<std::string> TopK(const std::vector<std::string>& list, int k) {
  const auto n = std::min(list.size(), static_cast<std::size_t>(k));
  return {list.begin(), list.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace

void EvalRun::Validate() const {
  std::set<std::string> seen;
  for (const auto& item : ranked_list) {
    if (!seen.insert(item).second) {
      throw std::invalid_argument("duplicate item in ranked list: " + item);
    }
  }
  for (int k : k_values) CheckK(k);
}

std::size_t EvaluableUsers(const EvalRun& run) {
  return static_cast<std::size_t>(
      std::count_if(run.user_truth.begin(), run.user_truth.end(),
                    [](const auto& kv) { return !kv.second.empty(); }));
}

double HitRateAtK(const EvalRun& run, int k) {
  CheckK(k);
  RequireUsers(run);
  const auto top = TopK(run.ranked_list, k);
  std::size_t hits = 0;
  for (const auto& [user, truth] : run.user_truth) {
    if (truth.empty()) continue;
    if (std::any_of(top.begin(), top.end(),
                    [&](const std::string& i) { return truth.count(i) > 0; })) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(EvaluableUsers(run));
}

double NdcgAtK(const EvalRun& run, int k) {
  CheckK(k);
  RequireUsers(run);
  const auto top = TopK(run.ranked_list, k);
  double total = 0.0;
  for (const auto& [user, truth] : run.user_truth) {
    if (truth.empty()) continue;
    double dcg = 0.0;
    for (std::size_t r = 0; r < top.size(); ++r) {
      if (truth.count(top[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min(truth.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < ideal; ++r) {
      idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    total += dcg / idcg;
  }
  return total / static_cast<double>(EvaluableUsers(run));
}

std::vector<std::string> TruthRanking(const EvalRun& run) {
  std::vector<std::pair<std::string, std::int64_t>> items(run.item_truth.begin(),
                                                          run.item_truth.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& kv : items) out.push_back(std::move(kv.first));
  return out;
}

double JaccardAtK(const EvalRun& run, int k) {
  CheckK(k);
  if (run.item_truth.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("Jaccard@" + std::to_string(k) + " needs at least " +
                                std::to_string(k) + " items with truth counts");
  }
  const auto pred = TopK(run.ranked_list, k);
  const auto truth = TopK(TruthRanking(run), k);
  const std::set<std::string> a(pred.begin(), pred.end());
  const std::set<std::string> b(truth.begin(), truth.end());
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

MetricsReport Evaluate(const EvalRun& run) {
  run.Validate();
  MetricsReport r;
  for (int k : run.k_values) {
    r.hr[k] = HitRateAtK(run, k);
    r.ndcg[k] = NdcgAtK(run, k);
    r.jaccard[k] = JaccardAtK(run, k);
  }
  r.users = EvaluableUsers(run);
  r.items = run.ranked_list.size();
  return r;
}

std::string MetricsReport::ToJson() const {
  nlohmann::ordered_json j;
  auto block = [](const std::map<int, double>& m) {
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) b[std::to_string(k)] = v;
    return b;
  };
  j["hr"] = block(hr);
  j["ndcg"] = block(ndcg);
  j["jaccard"] = block(jaccard);
  j["users"] = users;
  j["items"] = items;
  return j.dump(2) + "\n";
}

}  // namespace trail::eval
