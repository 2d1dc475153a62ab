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

// Contrastive projection head, InfoNCE and supervised objectives, and a
// plain gradient-descent trainer for the head.
//
// Forward pass of the head for an input e:
//   h   = relu(W1 e + b1)
//   h~  = h * m                 (inverted dropout mask; all ones in eval)
//   out = (z - mean(z)) / (std(z) + eps),  z = W2 h~
// with population standard deviation and no learned affine.

#ifndef TRAIL_CONTRASTIVE_H_
#define TRAIL_CONTRASTIVE_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trail/ingest.h"
#include "trail/mining.h"
#include "trail/similarity.h"

namespace trail::contrastive {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kCeEps = 1e-12;
inline constexpr int kTrendFeatureCount = 8;

enum class Mode { kTrain, kEval };

struct ProjectionHead {
  Matrix w1;  // d_hid x d_in
  Vector b1;  // d_hid
  Matrix w2;  // d_out x d_hid
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  int d_in() const { return static_cast<int>(w1.cols()); }
  int d_hid() const { return static_cast<int>(w1.rows()); }
  int d_out() const { return static_cast<int>(w2.rows()); }

  // Uniform(+-1/sqrt(fan_in)) weights, zero bias.
  static ProjectionHead Init(int d_in, int d_hid, int d_out,
                             double dropout_rate, std::uint64_t seed);
  // Throws ConfigError on inconsistent shapes, non-finite entries or a
  // dropout rate outside [0, 1).
  void Validate() const;
};

struct HeadGradient {
  Matrix w1;
  Vector b1;
  Matrix w2;

  static HeadGradient ZerosLike(const ProjectionHead& head);
  HeadGradient& operator+=(const HeadGradient& o);
  HeadGradient& operator*=(double s);
};

// Inverted-dropout keep mask: entries are 0 or 1/(1-rate).
Vector DropoutMask(int size, double rate, std::uint64_t seed);
// Per-sample mask seed used by TripletLoss in train mode.
std::uint64_t MaskSeed(std::uint64_t seed, const std::string& sample_id);

// Intermediate values kept for the backward pass.
struct ProjectionCache {
  Vector raw;
  Vector pre;       // W1 e + b1
  Vector mask;
  Vector hidden;    // relu(pre) * mask
  Vector centered;  // z - mean(z)
  double stddev = 0.0;
  Vector out;
};

ProjectionCache ProjectForward(const ProjectionHead& head, const Vector& raw,
                               const Vector& mask);
// Accumulates d(loss)/d(params) given d(loss)/d(out) into `grad`.
void ProjectBackward(const ProjectionHead& head, const ProjectionCache& cache,
                     const Vector& grad_out, HeadGradient& grad);

// Eval mode ignores `seed`. Throws std::invalid_argument on a dimension
// mismatch.
Vector Project(const ProjectionHead& head, const Vector& raw, Mode mode,
               std::uint64_t seed = 0);

// -log(sum_pos exp(<a,p>/tau) / sum_all exp(<a,x>/tau)).
double InfoNce(const Vector& anchor, const std::vector<Vector>& positives,
               const std::vector<Vector>& negatives, double tau);

// Same loss from precomputed dot products.
double InfoNceFromDots(std::span<const double> pos_dots,
                       std::span<const double> neg_dots, double tau);

struct InfoNceGrad {
  double loss = 0.0;
  Vector anchor;
  std::vector<Vector> positives;
  std::vector<Vector> negatives;
};
InfoNceGrad InfoNceWithGrad(const Vector& anchor,
                            const std::vector<Vector>& positives,
                            const std::vector<Vector>& negatives, double tau);

// -sum truth_j log(pred_j + 1e-12). Both inputs must be distributions of
// equal length (sum 1 +- 1e-6).
double SupervisedCe(std::span<const double> truth, std::span<const double> pred);
double Entropy(std::span<const double> p);
std::vector<double> Softmax(std::span<const double> scores);
// Counts scaled to sum 1; all-zero counts give the uniform distribution.
std::vector<double> NormalizeCounts(std::span<const double> counts);

double CombinedLoss(double sup, double con, double lambda);

struct LossWeights {
  double tau = 0.1;
  double lambda = 1.0;
  void Validate() const;
};

using RawEmbeddings = std::map<std::string, Vector>;

// Loss of one triplet through the head. In train mode each sample gets a
// dropout mask seeded from (seed, sample_id). If `grad` is non-null the
// parameter gradient scaled by `grad_scale` is accumulated into it.
double TripletLoss(const ProjectionHead& head, const mining::Triplet& t,
                   const RawEmbeddings& raw, double tau, Mode mode,
                   std::uint64_t seed, HeadGradient* grad = nullptr,
                   double grad_scale = 1.0);

// Mean eval-mode loss over all triplets.
double MeanLoss(const ProjectionHead& head,
                const std::vector<mining::Triplet>& triplets,
                const RawEmbeddings& raw, double tau);

struct TrainConfig {
  double tau = 0.1;
  int epochs = 20;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  bool use_dropout = true;
  int threads = 1;

  void Validate() const;
};

struct TrainResult {
  ProjectionHead head;
  // Eval-mode mean loss at the start of each epoch.
  std::vector<double> loss_trace;
  // Eval-mode mean loss after the last update (initial loss if epochs = 0).
  double final_loss = 0.0;
};

// Full-batch gradient descent on mean InfoNCE. Missing embedding ids throw
// InvariantError before any update.
TrainResult TrainHead(const ProjectionHead& head,
                      const std::vector<mining::Triplet>& triplets,
                      const RawEmbeddings& raw, const TrainConfig& cfg);

// last, mean, max, length, change rate, slope, first, zero count.
std::array<double, kTrendFeatureCount> TrendFeatures(const ingest::Sample& s);

class FeatureStandardizer {
 public:
  static FeatureStandardizer Fit(const std::vector<ingest::Sample>& samples);
  std::array<double, kTrendFeatureCount> Apply(
      const std::array<double, kTrendFeatureCount>& f) const;

  std::array<double, kTrendFeatureCount> mean{};
  std::array<double, kTrendFeatureCount> scale{};
};

// e'_S = [metadata embedding, standardized trend features].
RawEmbeddings BuildRawEmbeddings(const std::vector<ingest::Sample>& samples,
                                 const similarity::EmbeddingTable& items,
                                 const FeatureStandardizer& standardizer);

std::string HeadToJson(const ProjectionHead& head);
ProjectionHead HeadFromJson(const std::string& text);
void SaveHead(const std::string& path, const ProjectionHead& head);
ProjectionHead LoadHead(const std::string& path);
std::string LossTraceCsv(const std::vector<double>& trace);

}  // namespace trail::contrastive

#endif  // TRAIL_CONTRASTIVE_H_
