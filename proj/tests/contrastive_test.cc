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

#include "trail/contrastive.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.h"
#include "trail/common.h"

namespace trail::contrastive {
namespace {

Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// A single-coordinate vector gives dot products equal to its entries.
Vector Dot(double x) { return Vec({x}); }

TEST(ProjectTest, ZeroWeightsGiveZeroOutput) {
  auto head = ProjectionHead::Init(5, 4, 3, 0.1, 1);
  head.w1.setZero();
  head.b1.setZero();
  const Vector out = Project(head, Vec({1, 2, 3, 4, 5}), Mode::kEval);
  EXPECT_EQ(out, Vector::Zero(3));
}

TEST(ProjectTest, LayerNormPostconditions) {
  Rng rng(3);
  for (int round = 0; round < 50; ++round) {
    const auto head = ProjectionHead::Init(10, 12, 6, 0.1, rng.Next());
    Vector raw(10);
    for (int i = 0; i < 10; ++i) raw[i] = 4.0 * rng.Uniform() - 2.0;
    const auto cache = ProjectForward(head, raw, Vector::Ones(12));
    if (cache.stddev < 1e-2) continue;  // degenerate input
    EXPECT_NEAR(cache.out.mean(), 0.0, 1e-6);
    const double sd = std::sqrt(cache.out.array().square().mean());
    EXPECT_NEAR(sd, 1.0, 1e-3);
  }
}

TEST(ProjectTest, DropoutSeeded) {
  const auto head = ProjectionHead::Init(4, 32, 5, 0.5, 9);
  const Vector raw = Vec({0.5, -1, 2, 0.1});
  EXPECT_EQ(Project(head, raw, Mode::kTrain, 17), Project(head, raw, Mode::kTrain, 17));
  EXPECT_NE(Project(head, raw, Mode::kTrain, 17), Project(head, raw, Mode::kTrain, 18));
  EXPECT_EQ(Project(head, raw, Mode::kEval, 1), Project(head, raw, Mode::kEval, 2));
}

TEST(ProjectTest, DropoutMaskValues) {
  const Vector m = DropoutMask(1000, 0.25, 4);
  int kept = 0;
  for (int i = 0; i < m.size(); ++i) {
    EXPECT_TRUE(m[i] == 0.0 || std::abs(m[i] - 1.0 / 0.75) < 1e-15);
    kept += m[i] != 0.0;
  }
  EXPECT_NEAR(kept / 1000.0, 0.75, 0.05);
  EXPECT_EQ(DropoutMask(7, 0.0, 4), Vector::Ones(7));
}

TEST(ProjectTest, DimensionMismatch) {
  const auto head = ProjectionHead::Init(4, 3, 2, 0.1, 1);
  EXPECT_THROW(Project(head, Vec({1, 2, 3}), Mode::kEval), std::invalid_argument);
}

TEST(ProjectTest, HeadValidation) {
  auto head = ProjectionHead::Init(4, 3, 2, 0.1, 1);
  EXPECT_NO_THROW(head.Validate());
  head.dropout_rate = 1.0;
  EXPECT_THROW(head.Validate(), ConfigError);
  head = ProjectionHead::Init(4, 3, 2, 0.1, 1);
  head.b1.resize(2);
  EXPECT_THROW(head.Validate(), ConfigError);
}

TEST(InfoNceTest, Examples) {
  EXPECT_DOUBLE_EQ(InfoNce(Dot(1), {Dot(3)}, {}, 0.1), 0.0);
  for (double tau : {0.05, 0.1, 1.0, 7.0}) {
    EXPECT_NEAR(InfoNce(Dot(1), {Dot(0.4)}, {Dot(0.4)}, tau), std::log(2.0), 1e-12);
  }
  EXPECT_NEAR(InfoNce(Dot(1), {Dot(1)}, {Dot(0)}, 0.1), std::log1p(std::exp(-10.0)),
              1e-15);
  EXPECT_NEAR(InfoNce(Dot(1), {Dot(1)}, {Dot(0)}, 0.1), 4.5399e-5, 1e-9);
  EXPECT_THROW(InfoNce(Dot(1), {}, {Dot(0)}, 0.1), std::invalid_argument);
}

TEST(InfoNceTest, LargeLogitsStayFinite) {
  const double l = InfoNce(Dot(1), {Dot(-500)}, {Dot(500)}, 0.01);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, 100000.0, 1e-6);
}

TEST(InfoNceTest, ShiftInvariantAndMonotone) {
  Rng rng(21);
  for (int round = 0; round < 200; ++round) {
    std::vector<double> pos(1 + rng.Below(3)), neg(rng.Below(4));
    for (auto& x : pos) x = 4 * rng.Uniform() - 2;
    for (auto& x : neg) x = 4 * rng.Uniform() - 2;
    const double tau = 0.05 + rng.Uniform();
    const double base = InfoNceFromDots(pos, neg, tau);
    EXPECT_GE(base, 0.0);
    auto shift = [](std::vector<double> v, double c) {
      for (auto& x : v) x += c;
      return v;
    };
    EXPECT_NEAR(InfoNceFromDots(shift(pos, 3.7), shift(neg, 3.7), tau), base, 1e-9);
    if (!neg.empty()) {
      auto more = neg;
      more[0] += 0.1;
      EXPECT_GT(InfoNceFromDots(pos, more, tau), base);
      auto better = pos;
      better[0] += 0.1;
      EXPECT_LT(InfoNceFromDots(better, neg, tau), base);
    } else {
      EXPECT_EQ(base, 0.0);
    }
  }
}

TEST(InfoNceTest, VectorAndDotFormsAgree) {
  const Vector a = Vec({0.3, -1.2, 0.5});
  const std::vector<Vector> p = {Vec({1, 0, 2}), Vec({-0.5, 0.5, 0})};
  const std::vector<Vector> n = {Vec({0, 1, 1})};
  const std::vector<double> pd = {a.dot(p[0]), a.dot(p[1])};
  const std::vector<double> nd = {a.dot(n[0])};
  EXPECT_NEAR(InfoNce(a, p, n, 0.3), InfoNceFromDots(pd, nd, 0.3), 1e-14);
  EXPECT_NEAR(InfoNceWithGrad(a, p, n, 0.3).loss, InfoNce(a, p, n, 0.3), 1e-14);
}

TEST(InfoNceTest, InputGradientMatchesDifferences) {
  const Vector a = Vec({0.3, -1.2, 0.5});
  const std::vector<Vector> p = {Vec({1, 0, 2})};
  const std::vector<Vector> n = {Vec({0, 1, 1}), Vec({-1, 0.2, 0.4})};
  const auto g = InfoNceWithGrad(a, p, n, 0.5);
  for (int i = 0; i < 3; ++i) {
    Vector up = a, down = a;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd = (InfoNce(up, p, n, 0.5) - InfoNce(down, p, n, 0.5)) / 2e-6;
    EXPECT_NEAR(g.anchor[i], fd, 1e-7);
  }
}

TEST(SupervisedCeTest, Examples) {
  const std::vector<double> one_hot = {0, 1, 0};
  EXPECT_NEAR(SupervisedCe(one_hot, one_hot), 0.0, 1e-11);
  const std::vector<double> uni = {0.5, 0.5};
  EXPECT_NEAR(SupervisedCe(uni, uni), std::log(2.0), 1e-11);
  const std::vector<double> t = {1, 0};
  EXPECT_NEAR(SupervisedCe(t, uni), std::log(2.0), 1e-11);
  const std::vector<double> short_p = {1.0};
  EXPECT_THROW(SupervisedCe(t, short_p), std::invalid_argument);
  const std::vector<double> bad = {0.7, 0.7};
  EXPECT_THROW(SupervisedCe(t, bad), std::invalid_argument);
  const std::vector<double> neg = {1.5, -0.5};
  EXPECT_THROW(SupervisedCe(neg, uni), std::invalid_argument);
}

TEST(SupervisedCeTest, GibbsInequality) {
  Rng rng(8);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 2 + rng.Below(8);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = rng.Uniform() + 1e-3;
    for (auto& x : b) x = rng.Uniform() + 1e-3;
    const auto p = NormalizeCounts(a);
    const auto q = NormalizeCounts(b);
    EXPECT_NEAR(SupervisedCe(p, p), Entropy(p), 1e-9);
    EXPECT_GE(SupervisedCe(p, q), Entropy(p) - 1e-12);
  }
}

TEST(SupervisedCeTest, Helpers) {
  const std::vector<double> zeros = {0, 0, 0, 0};
  for (double x : NormalizeCounts(zeros)) EXPECT_DOUBLE_EQ(x, 0.25);
  const std::vector<double> scores = {1000, 1000};
  for (double x : Softmax(scores)) EXPECT_DOUBLE_EQ(x, 0.5);
  const std::vector<double> s2 = {0, std::log(3.0)};
  EXPECT_NEAR(Softmax(s2)[1], 0.75, 1e-15);
}

TEST(CombinedLossTest, Examples) {
  EXPECT_DOUBLE_EQ(CombinedLoss(0.5, 0.3, 0), 0.5);
  EXPECT_DOUBLE_EQ(CombinedLoss(0.5, 0.3, 1), 0.8);
  EXPECT_DOUBLE_EQ(CombinedLoss(0, 0.3, 2), 0.6);
  LossWeights w;
  w.tau = 0;
  EXPECT_THROW(w.Validate(), ConfigError);
  w.tau = 0.1;
  w.lambda = -1;
  EXPECT_THROW(w.Validate(), ConfigError);
}

TEST(GradientCheckTest, TwentyFourRandomFixtures) {
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    const auto c = fixture::MakeGradCheckCase(seed);
    EXPECT_LT(fixture::MaxGradientError(c), 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheckTest, DetectsCorruptedGradient) {
  const auto c = fixture::MakeGradCheckCase(1);
  const auto numeric = fixture::NumericGradient(c);
  auto analytic = fixture::AnalyticGradient(c);
  ASSERT_LT(fixture::MaxRelativeError(analytic, numeric), 1e-4);
  analytic.b1 *= 1.01;
  EXPECT_GT(fixture::MaxRelativeError(analytic, numeric), 1e-4);
}

TEST(GradientCheckTest, EvalModeToo) {
  const auto c = fixture::MakeGradCheckCase(5);
  auto grad = HeadGradient::ZerosLike(c.head);
  TripletLoss(c.head, c.triplet, c.raw, c.tau, Mode::kEval, 0, &grad);
  auto h = c.head;
  const double keep = h.w2(0, 0);
  h.w2(0, 0) = keep + 1e-5;
  const double up = TripletLoss(h, c.triplet, c.raw, c.tau, Mode::kEval, 0);
  h.w2(0, 0) = keep - 1e-5;
  const double down = TripletLoss(h, c.triplet, c.raw, c.tau, Mode::kEval, 0);
  EXPECT_NEAR(grad.w2(0, 0), (up - down) / 2e-5, 1e-6 * (1 + std::abs(grad.w2(0, 0))));
}

TEST(TrainHeadTest, ZeroEpochsIsIdentity) {
  const auto f = fixture::MakeSeparableFixture();
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = TrainHead(f.head, f.triplets, f.raw, cfg);
  EXPECT_TRUE(r.loss_trace.empty());
  EXPECT_EQ(r.head.w1, f.head.w1);
  EXPECT_EQ(r.head.b1, f.head.b1);
  EXPECT_EQ(r.head.w2, f.head.w2);
  EXPECT_DOUBLE_EQ(r.final_loss, MeanLoss(f.head, f.triplets, f.raw, cfg.tau));
}

TEST(TrainHeadTest, SeparableFixtureLossHalves) {
  const auto f = fixture::MakeSeparableFixture();
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.05;
  const auto r = TrainHead(f.head, f.triplets, f.raw, cfg);
  ASSERT_EQ(r.loss_trace.size(), 200u);
  EXPECT_GT(r.loss_trace.front(), 1.0);
  EXPECT_LT(r.final_loss, 0.5 * r.loss_trace.front());
}

TEST(TrainHeadTest, SmallStepTraceNonIncreasing) {
  const auto f = fixture::MakeSeparableFixture();
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.learning_rate = 0.002;
  cfg.use_dropout = false;
  const auto r = TrainHead(f.head, f.triplets, f.raw, cfg);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
    EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1]) << "epoch " << i;
  }
  EXPECT_LE(r.final_loss, r.loss_trace.back());
}

TEST(TrainHeadTest, ThreadCountDoesNotChangeResult) {
  auto f = fixture::MakeSeparableFixture();
  // Replicate triplets past one gradient chunk.
  const auto base = f.triplets;
  for (int i = 0; i < 10; ++i) f.triplets.insert(f.triplets.end(), base.begin(), base.end());
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto one = TrainHead(f.head, f.triplets, f.raw, cfg);
  cfg.threads = 4;
  const auto four = TrainHead(f.head, f.triplets, f.raw, cfg);
  EXPECT_EQ(one.head.w1, four.head.w1);
  EXPECT_EQ(one.loss_trace, four.loss_trace);
}

TEST(TrainHeadTest, MissingEmbeddingFailsBeforeTraining) {
  auto f = fixture::MakeSeparableFixture();
  f.triplets.push_back({"x1", {"ghost"}, {"y1"}});
  EXPECT_THROW(TrainHead(f.head, f.triplets, f.raw, TrainConfig{}), InvariantError);
  TrainConfig bad;
  bad.learning_rate = 0;
  EXPECT_THROW(TrainHead(f.head, {}, f.raw, bad), ConfigError);
}

TEST(TrendFeaturesTest, Values) {
  ingest::Sample s;
  s.history = {0, 2, 4};
  const auto f = TrendFeatures(s);
  EXPECT_DOUBLE_EQ(f[0], 4);  // last
  EXPECT_DOUBLE_EQ(f[1], 2);  // mean
  EXPECT_DOUBLE_EQ(f[2], 4);  // max
  EXPECT_DOUBLE_EQ(f[3], 3);  // length
  EXPECT_DOUBLE_EQ(f[4], 1);  // (4 - 2) / 2
  EXPECT_DOUBLE_EQ(f[5], 2);  // slope
  EXPECT_DOUBLE_EQ(f[6], 0);  // first
  EXPECT_DOUBLE_EQ(f[7], 1);  // zero windows
  ingest::Sample empty;
  for (double x : TrendFeatures(empty)) EXPECT_EQ(x, 0.0);
}

TEST(TrendFeaturesTest, IgnoresLabel) {
  ingest::Sample a;
  a.history = {1, 3};
  auto b = a;
  a.label = 0;
  b.label = 99;
  EXPECT_EQ(TrendFeatures(a), TrendFeatures(b));
}

TEST(StandardizerTest, ZeroMeanUnitScale) {
  std::vector<ingest::Sample> samples(3);
  samples[0].history = {1};
  samples[1].history = {2, 2};
  samples[2].history = {3, 0, 6};
  const auto st = FeatureStandardizer::Fit(samples);
  std::array<double, kTrendFeatureCount> sum{};
  for (const auto& s : samples) {
    const auto z = st.Apply(TrendFeatures(s));
    for (int i = 0; i < kTrendFeatureCount; ++i) sum[i] += z[i];
  }
  for (double x : sum) EXPECT_NEAR(x, 0.0, 1e-12);
  for (double x : st.scale) EXPECT_GT(x, 0.0);
}

TEST(HeadIoTest, JsonRoundTripIsExact) {
  const auto head = ProjectionHead::Init(7, 5, 3, 0.15, 99);
  const auto back = HeadFromJson(HeadToJson(head));
  EXPECT_EQ(back.w1, head.w1);
  EXPECT_EQ(back.b1, head.b1);
  EXPECT_EQ(back.w2, head.w2);
  EXPECT_EQ(back.dropout_rate, head.dropout_rate);
  EXPECT_EQ(back.seed, head.seed);
  EXPECT_EQ(LossTraceCsv({1.5, 0.25}), "epoch,loss\n0,1.5\n1,0.25\n");
}

}  // namespace
}  // namespace trail::contrastive
