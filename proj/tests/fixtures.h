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

// Shared fixtures for the contrastive head: finite-difference gradient
// checks and a small separable training set.

#ifndef TRAIL_TESTS_FIXTURES_H_
#define TRAIL_TESTS_FIXTURES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trail/common.h"
#include "trail/contrastive.h"
#include "trail/mining.h"

namespace trail::fixture {

inline constexpr double kFdStep = 1e-4;

// ||analytic - numeric|| / max(||analytic||, ||numeric||) for one parameter
// tensor. Central differences carry an absolute truncation error, so the
// comparison is made tensor-wise rather than entry by entry.
inline double RelativeError(const Eigen::VectorXd& analytic,
                            const Eigen::VectorXd& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale > 0.0 ? (analytic - numeric).norm() / scale : 0.0;
}

struct GradCheckCase {
  contrastive::ProjectionHead head;
  mining::Triplet triplet;
  contrastive::RawEmbeddings raw;
  double tau = 0.1;
  std::uint64_t mask_seed = 0;
};

// True when central differences at kFdStep are not a fair reference:
// a pre-activation sits near the rectifier kink, a layer-norm input is
// nearly constant, or the loss has saturated to zero.
inline bool Degenerate(const GradCheckCase& c) {
  for (const auto& [id, v] : c.raw) {
    const contrastive::Vector mask = contrastive::DropoutMask(
        c.head.d_hid(), c.head.dropout_rate,
        contrastive::MaskSeed(c.mask_seed, id));
    const auto cache = contrastive::ProjectForward(c.head, v, mask);
    if (cache.pre.cwiseAbs().minCoeff() < 1e-3) return true;
    if (cache.stddev < 0.1) return true;
  }
  return contrastive::TripletLoss(c.head, c.triplet, c.raw, c.tau,
                                  contrastive::Mode::kTrain, c.mask_seed) < 1e-6;
}

// Random head with dropout, one anchor, 1-3 positives, 1-4 negatives.
// Degenerate draws are rejected and redrawn from the same stream.
inline GradCheckCase MakeGradCheckCase(std::uint64_t seed) {
  Rng rng(seed);
  for (;;) {
    GradCheckCase c;
    const int d_in = 6 + static_cast<int>(rng.Below(7));
    const int d_hid = 5 + static_cast<int>(rng.Below(6));
    const int d_out = 3 + static_cast<int>(rng.Below(4));
    c.head = contrastive::ProjectionHead::Init(d_in, d_hid, d_out, 0.2, rng.Next());
    for (int i = 0; i < c.head.b1.size(); ++i) c.head.b1[i] = rng.Uniform() - 0.5;
    const double taus[] = {0.1, 0.5, 1.0};
    c.tau = taus[rng.Below(3)];
    c.mask_seed = rng.Next();
    auto add = [&](const std::string& id) {
      contrastive::Vector v(d_in);
      for (int i = 0; i < d_in; ++i) v[i] = 2.0 * rng.Uniform() - 1.0;
      c.raw[id] = v;
      return id;
    };
    c.triplet.anchor = add("anchor");
    const int n_pos = 1 + static_cast<int>(rng.Below(3));
    const int n_neg = 1 + static_cast<int>(rng.Below(4));
    for (int i = 0; i < n_pos; ++i) c.triplet.positives.push_back(add("p" + std::to_string(i)));
    for (int i = 0; i < n_neg; ++i) c.triplet.negatives.push_back(add("n" + std::to_string(i)));
    if (!Degenerate(c)) return c;
  }
}

inline contrastive::HeadGradient AnalyticGradient(const GradCheckCase& c) {
  auto grad = contrastive::HeadGradient::ZerosLike(c.head);
  contrastive::TripletLoss(c.head, c.triplet, c.raw, c.tau,
                           contrastive::Mode::kTrain, c.mask_seed, &grad);
  return grad;
}

// Central differences at kFdStep for every head parameter, with the same
// dropout masks as the analytic pass.
inline contrastive::HeadGradient NumericGradient(const GradCheckCase& c) {
  auto grad = contrastive::HeadGradient::ZerosLike(c.head);
  auto head = c.head;
  auto loss = [&] {
    return contrastive::TripletLoss(head, c.triplet, c.raw, c.tau,
                                    contrastive::Mode::kTrain, c.mask_seed);
  };
  auto fill = [&](auto& param, auto& out) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double keep = param.data()[i];
      param.data()[i] = keep + kFdStep;
      const double up = loss();
      param.data()[i] = keep - kFdStep;
      const double down = loss();
      param.data()[i] = keep;
      out.data()[i] = (up - down) / (2.0 * kFdStep);
    }
  };
  fill(head.w1, grad.w1);
  fill(head.b1, grad.b1);
  fill(head.w2, grad.w2);
  return grad;
}

inline double MaxRelativeError(const contrastive::HeadGradient& a,
                               const contrastive::HeadGradient& n) {
  auto flat = [](const Eigen::MatrixXd& m) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  };
  return std::max({RelativeError(flat(a.w1), flat(n.w1)),
                   RelativeError(a.b1, n.b1),
                   RelativeError(flat(a.w2), flat(n.w2))});
}

inline double MaxGradientError(const GradCheckCase& c) {
  return MaxRelativeError(AnalyticGradient(c), NumericGradient(c));
}

// Eight points whose cluster is carried by the sign of the first
// coordinate alone; the remaining coordinates are larger distractors, so an
// untrained head does not separate the clusters.
struct SeparableFixture {
  contrastive::ProjectionHead head;
  std::vector<mining::Triplet> triplets;
  contrastive::RawEmbeddings raw;
};

inline SeparableFixture MakeSeparableFixture() {
  SeparableFixture f;
  const int d_in = 6;
  Rng rng(5);
  for (const char* id : {"x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4"}) {
    contrastive::Vector v(d_in);
    v[0] = id[0] == 'x' ? 1.0 : -1.0;
    for (int i = 1; i < d_in; ++i) v[i] = 4.0 * rng.Uniform() - 2.0;
    f.raw[id] = v;
  }
  f.triplets = {{"x1", {"x2"}, {"y1", "y2"}},
                {"x3", {"x4"}, {"y3", "y4"}},
                {"y1", {"y2"}, {"x1", "x3"}},
                {"y3", {"y4"}, {"x2", "x4"}}};
  f.head = contrastive::ProjectionHead::Init(d_in, 16, 8, 0.1, 11);
  return f;
}

}  // namespace trail::fixture

#endif  // TRAIL_TESTS_FIXTURES_H_
