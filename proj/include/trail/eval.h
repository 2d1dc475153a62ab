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

// Offline metrics for a single global ranked list: HR@K and NDCG@K against
// per-user test-window interactions, Jaccard@K against the true top-K.

#ifndef TRAIL_EVAL_H_
#define TRAIL_EVAL_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace trail::eval {

struct EvalRun {
  std::vector<std::string> ranked_list;
  std::map<std::string, std::set<std::string>> user_truth;
  std::map<std::string, std::int64_t> item_truth;
  std::vector<int> k_values = {5, 10};

  // Throws std::invalid_argument on duplicate ranked items or k < 1.
  void Validate() const;
};

// Users whose truth set is non-empty; they form the HR/NDCG denominator.
std::size_t EvaluableUsers(const EvalRun& run);

// Fraction of evaluable users whose truth meets the top k.
double HitRateAtK(const EvalRun& run, int k);
// Binary-relevance NDCG per user, averaged over evaluable users.
double NdcgAtK(const EvalRun& run, int k);
// |predicted top-k ∩ true top-k| / |union|; true ties by ascending item_id.
double JaccardAtK(const EvalRun& run, int k);

// Items ordered by descending true count, ties by ascending id.
std::vector<std::string> TruthRanking(const EvalRun& run);

struct MetricsReport {
  std::map<int, double> hr;
  std::map<int, double> ndcg;
  std::map<int, double> jaccard;
  std::size_t users = 0;
  std::size_t items = 0;

  // {"hr": {"5": ..}, "ndcg": {..}, "jaccard": {..}, "users": n, "items": n}
  std::string ToJson() const;
};

MetricsReport Evaluate(const EvalRun& run);

}  // namespace trail::eval

#endif  // TRAIL_EVAL_H_
