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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "trail/common.h"

namespace trail::contrastive {
namespace {

void CheckDim(const Vector& v, Eigen::Index d, const char* what) {
  if (v.size() != d) {
    throw std::invalid_argument(std::string(what) + " has dimension " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(d));
  }
}

double LogSumExp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

// log(1 + sum_neg / sum_pos) in exponent space. Written with log1p so
// that losses near zero keep their relative precision.
double LossFromLogits(std::span<const double> pos, std::span<const double> neg) {
  if (neg.empty()) return 0.0;
  const double d = LogSumExp(neg) - LogSumExp(pos);
  return d > 30.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

// Triplets per gradient chunk. Fixed so the reduction order, and hence the
// trained parameters, do not depend on the thread count.
constexpr std::size_t kChunk = 16;

}  // namespace

ProjectionHead ProjectionHead::Init(int d_in, int d_hid, int d_out,
                                    double dropout_rate, std::uint64_t seed) {
  if (d_in < 1 || d_hid < 1 || d_out < 1) {
    throw ConfigError("projection head dimensions must be positive");
  }
  ProjectionHead h;
  h.dropout_rate = dropout_rate;
  h.seed = seed;
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(d_in));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(d_hid));
  h.w1.resize(d_hid, d_in);
  for (int r = 0; r < d_hid; ++r)
    for (int c = 0; c < d_in; ++c) h.w1(r, c) = rng.Uniform(-a1, a1);
  h.b1 = Vector::Zero(d_hid);
  h.w2.resize(d_out, d_hid);
  for (int r = 0; r < d_out; ++r)
    for (int c = 0; c < d_hid; ++c) h.w2(r, c) = rng.Uniform(-a2, a2);
  h.Validate();
  return h;
}

void ProjectionHead::Validate() const {
  if (w1.size() == 0 || w2.size() == 0) {
    throw ConfigError("projection head has empty weights");
  }
  if (b1.size() != w1.rows() || w2.cols() != w1.rows()) {
    throw ConfigError("projection head shapes are inconsistent");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must be in [0, 1)");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite()) {
    throw ConfigError("projection head has non-finite parameters");
  }
}

HeadGradient HeadGradient::ZerosLike(const ProjectionHead& head) {
  return {Matrix::Zero(head.w1.rows(), head.w1.cols()),
          Vector::Zero(head.b1.size()),
          Matrix::Zero(head.w2.rows(), head.w2.cols())};
}

HeadGradient& HeadGradient::operator+=(const HeadGradient& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  return *this;
}

HeadGradient& HeadGradient::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  return *this;
}

std::uint64_t MaskSeed(std::uint64_t seed, const std::string& sample_id) {
  return Rng(seed ^ Fnv1a64(sample_id)).Next();
}

Vector DropoutMask(int size, double rate, std::uint64_t seed) {
  Vector m = Vector::Ones(size);
  if (rate <= 0.0) return m;
  Rng rng(seed);
  const double keep = 1.0 - rate;
  for (int i = 0; i < size; ++i) m(i) = rng.Uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

ProjectionCache ProjectForward(const ProjectionHead& head, const Vector& raw,
                               const Vector& mask) {
  CheckDim(raw, head.w1.cols(), "raw embedding");
  CheckDim(mask, head.w1.rows(), "dropout mask");
  ProjectionCache c;
  c.raw = raw;
  c.pre = head.w1 * raw + head.b1;
  c.mask = mask;
  c.hidden = c.pre.cwiseMax(0.0).cwiseProduct(mask);
  const Vector z = head.w2 * c.hidden;
  c.centered = z.array() - z.mean();
  c.stddev = std::sqrt(c.centered.squaredNorm() / static_cast<double>(z.size()));
  c.out = c.centered / (c.stddev + kLayerNormEps);
  return c;
}

void ProjectBackward(const ProjectionHead& head, const ProjectionCache& c,
                     const Vector& grad_out, HeadGradient& grad) {
  const double n = static_cast<double>(c.out.size());
  const double s = c.stddev + kLayerNormEps;
  // d out_i / d z_j = (delta_ij - 1/n) / s - c_i c_j / (n * sigma * s^2)
  Vector dz = (grad_out.array() - grad_out.mean()).matrix() / s;
  if (c.stddev > 0.0) {
    dz -= (grad_out.dot(c.centered) / (n * c.stddev * s * s)) * c.centered;
  }
  grad.w2.noalias() += dz * c.hidden.transpose();
  Vector dh = head.w2.transpose() * dz;
  dh = dh.cwiseProduct(c.mask);
  for (Eigen::Index i = 0; i < dh.size(); ++i) {
    if (c.pre(i) <= 0.0) dh(i) = 0.0;
  }
  grad.b1 += dh;
  grad.w1.noalias() += dh * c.raw.transpose();
}

Vector Project(const ProjectionHead& head, const Vector& raw, Mode mode,
               std::uint64_t seed) {
  const Vector mask = mode == Mode::kTrain
                          ? DropoutMask(head.d_hid(), head.dropout_rate, seed)
                          : Vector::Ones(head.d_hid());
  return ProjectForward(head, raw, mask).out;
}

double InfoNceFromDots(std::span<const double> pos_dots,
                       std::span<const double> neg_dots, double tau) {
  if (pos_dots.empty()) {
    throw std::invalid_argument("InfoNCE needs at least one positive");
  }
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  std::vector<double> pos, neg;
  for (double d : pos_dots) pos.push_back(d / tau);
  for (double d : neg_dots) neg.push_back(d / tau);
  return LossFromLogits(pos, neg);
}

InfoNceGrad InfoNceWithGrad(const Vector& anchor,
                            const std::vector<Vector>& positives,
                            const std::vector<Vector>& negatives, double tau) {
  if (positives.empty()) {
    throw std::invalid_argument("InfoNCE needs at least one positive");
  }
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  const std::size_t np = positives.size();
  std::vector<double> logits;
  for (const auto& p : positives) {
    CheckDim(p, anchor.size(), "positive");
    logits.push_back(anchor.dot(p) / tau);
  }
  for (const auto& x : negatives) {
    CheckDim(x, anchor.size(), "negative");
    logits.push_back(anchor.dot(x) / tau);
  }
  const std::span<const double> pos_logits(logits.data(), np);
  const double lse_all = LogSumExp(logits);
  const double lse_pos = LogSumExp(pos_logits);

  InfoNceGrad g;
  g.loss = LossFromLogits(pos_logits,
                          std::span<const double>(logits).subspan(np));
  g.anchor = Vector::Zero(anchor.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    double dl = std::exp(logits[k] - lse_all);
    if (k < np) dl -= std::exp(logits[k] - lse_pos);
    const Vector& x = k < np ? positives[k] : negatives[k - np];
    g.anchor += (dl / tau) * x;
    (k < np ? g.positives : g.negatives).push_back((dl / tau) * anchor);
  }
  return g;
}

double InfoNce(const Vector& anchor, const std::vector<Vector>& positives,
               const std::vector<Vector>& negatives, double tau) {
  std::vector<double> pos, neg;
  for (const auto& p : positives) {
    CheckDim(p, anchor.size(), "positive");
    pos.push_back(anchor.dot(p));
  }
  for (const auto& x : negatives) {
    CheckDim(x, anchor.size(), "negative");
    neg.push_back(anchor.dot(x));
  }
  return InfoNceFromDots(pos, neg, tau);
}

double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

double SupervisedCe(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("distribution length mismatch");
  }
  auto check = [](std::span<const double> p, const char* name) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) +
                                    " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(name) + " does not sum to 1");
    }
  };
  check(truth, "truth");
  check(pred, "pred");
  double ce = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    ce -= truth[j] * std::log(pred[j] + kCeEps);
  }
  return std::max(0.0, ce);
}

std::vector<double> Softmax(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p;
  p.reserve(scores.size());
  double sum = 0.0;
  for (double s : scores) {
    p.push_back(std::exp(s - top));
    sum += p.back();
  }
  for (double& x : p) x /= sum;
  return p;
}

std::vector<double> NormalizeCounts(std::span<const double> counts) {
  double sum = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw std::invalid_argument("negative count");
    sum += c;
  }
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = sum > 0 ? counts[i] / sum : 1.0 / static_cast<double>(counts.size());
  }
  return p;
}

double CombinedLoss(double sup, double con, double lambda) {
  return sup + lambda * con;
}

void LossWeights::Validate() const {
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be nonnegative");
}

double TripletLoss(const ProjectionHead& head, const mining::Triplet& t,
                   const RawEmbeddings& raw, double tau, Mode mode,
                   std::uint64_t seed, HeadGradient* grad, double grad_scale) {
  auto forward = [&](const std::string& id) {
    auto it = raw.find(id);
    if (it == raw.end()) throw InvariantError("no raw embedding for " + id);
    const Vector mask =
        mode == Mode::kTrain
            ? DropoutMask(head.d_hid(), head.dropout_rate, MaskSeed(seed, id))
            : Vector::Ones(head.d_hid());
    return ProjectForward(head, it->second, mask);
  };
  const ProjectionCache anchor = forward(t.anchor);
  std::vector<ProjectionCache> pos, neg;
  std::vector<Vector> pos_out, neg_out;
  for (const auto& id : t.positives) {
    pos.push_back(forward(id));
    pos_out.push_back(pos.back().out);
  }
  for (const auto& id : t.negatives) {
    neg.push_back(forward(id));
    neg_out.push_back(neg.back().out);
  }
  if (!grad) return InfoNce(anchor.out, pos_out, neg_out, tau);

  const InfoNceGrad g = InfoNceWithGrad(anchor.out, pos_out, neg_out, tau);
  ProjectBackward(head, anchor, grad_scale * g.anchor, *grad);
  for (std::size_t k = 0; k < pos.size(); ++k) {
    ProjectBackward(head, pos[k], grad_scale * g.positives[k], *grad);
  }
  for (std::size_t k = 0; k < neg.size(); ++k) {
    ProjectBackward(head, neg[k], grad_scale * g.negatives[k], *grad);
  }
  return g.loss;
}

double MeanLoss(const ProjectionHead& head,
                const std::vector<mining::Triplet>& triplets,
                const RawEmbeddings& raw, double tau) {
  if (triplets.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : triplets) {
    sum += TripletLoss(head, t, raw, tau, Mode::kEval, 0);
  }
  return sum / static_cast<double>(triplets.size());
}

void TrainConfig::Validate() const {
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
}

TrainResult TrainHead(const ProjectionHead& head,
                      const std::vector<mining::Triplet>& triplets,
                      const RawEmbeddings& raw, const TrainConfig& cfg) {
  cfg.Validate();
  head.Validate();
  for (const auto& t : triplets) {
    for (const auto* ids : {&t.positives, &t.negatives}) {
      for (const auto& id : *ids) {
        if (!raw.count(id)) throw InvariantError("no raw embedding for " + id);
      }
    }
    if (!raw.count(t.anchor)) {
      throw InvariantError("no raw embedding for " + t.anchor);
    }
    if (raw.at(t.anchor).size() != head.d_in()) {
      throw InvariantError("raw embedding dimension does not match head d_in");
    }
  }
  TrainResult result{head, {}, 0.0};
  if (triplets.empty()) {
    return result;
  }
  const Mode mode = cfg.use_dropout && head.dropout_rate > 0.0 ? Mode::kTrain
                                                               : Mode::kEval;
  const double scale = 1.0 / static_cast<double>(triplets.size());
  const std::size_t chunks = (triplets.size() + kChunk - 1) / kChunk;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ProjectionHead& h = result.head;
    result.loss_trace.push_back(MeanLoss(h, triplets, raw, cfg.tau));
    const std::uint64_t epoch_seed =
        Rng(cfg.seed + static_cast<std::uint64_t>(epoch)).Next();
    std::vector<HeadGradient> partial(chunks, HeadGradient::ZerosLike(h));
    ParallelFor(chunks, cfg.threads, [&](std::size_t c) {
      const std::size_t end = std::min(triplets.size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        TripletLoss(h, triplets[i], raw, cfg.tau, mode, epoch_seed,
                    &partial[c], scale);
      }
    });
    for (std::size_t c = 1; c < chunks; ++c) partial[0] += partial[c];
    h.w1 -= cfg.learning_rate * partial[0].w1;
    h.b1 -= cfg.learning_rate * partial[0].b1;
    h.w2 -= cfg.learning_rate * partial[0].w2;
  }
  result.final_loss = MeanLoss(result.head, triplets, raw, cfg.tau);
  return result;
}

std::array<double, kTrendFeatureCount> TrendFeatures(const ingest::Sample& s) {
  std::array<double, kTrendFeatureCount> f{};
  const auto& h = s.history;
  if (h.empty()) return f;
  std::vector<double> x, y;
  double sum = 0.0, peak = 0.0, zeros = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = static_cast<double>(h[i]);
    x.push_back(static_cast<double>(i));
    y.push_back(v);
    sum += v;
    peak = std::max(peak, v);
    if (h[i] == 0) zeros += 1.0;
  }
  const double prev = h.size() >= 2 ? y[h.size() - 2] : 0.0;
  f[0] = y.back();
  f[1] = sum / static_cast<double>(h.size());
  f[2] = peak;
  f[3] = static_cast<double>(h.size());
  f[4] = similarity::ChangeRate(prev, y.back());
  f[5] = FitLine(x, y).slope;
  f[6] = y.front();
  f[7] = zeros;
  return f;
}

FeatureStandardizer FeatureStandardizer::Fit(
    const std::vector<ingest::Sample>& samples) {
  FeatureStandardizer st;
  st.scale.fill(1.0);
  if (samples.empty()) return st;
  std::array<double, kTrendFeatureCount> sum{}, sq{};
  for (const auto& s : samples) {
    const auto f = TrendFeatures(s);
    for (int k = 0; k < kTrendFeatureCount; ++k) {
      sum[k] += f[k];
      sq[k] += f[k] * f[k];
    }
  }
  const double n = static_cast<double>(samples.size());
  for (int k = 0; k < kTrendFeatureCount; ++k) {
    st.mean[k] = sum[k] / n;
    const double var = std::max(0.0, sq[k] / n - st.mean[k] * st.mean[k]);
    st.scale[k] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return st;
}

std::array<double, kTrendFeatureCount> FeatureStandardizer::Apply(
    const std::array<double, kTrendFeatureCount>& f) const {
  std::array<double, kTrendFeatureCount> out{};
  for (int k = 0; k < kTrendFeatureCount; ++k) {
    out[k] = (f[k] - mean[k]) / scale[k];
  }
  return out;
}

RawEmbeddings BuildRawEmbeddings(const std::vector<ingest::Sample>& samples,
                                 const similarity::EmbeddingTable& items,
                                 const FeatureStandardizer& standardizer) {
  RawEmbeddings out;
  for (const auto& s : samples) {
    auto it = items.find(s.item_id);
    if (it == items.end()) {
      throw InvariantError("no metadata embedding for item " + s.item_id);
    }
    const auto& meta = it->second;
    const auto feats = standardizer.Apply(TrendFeatures(s));
    Vector v(static_cast<Eigen::Index>(meta.size()) + kTrendFeatureCount);
    for (std::size_t i = 0; i < meta.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = meta[i];
    }
    for (int k = 0; k < kTrendFeatureCount; ++k) {
      v(static_cast<Eigen::Index>(meta.size()) + k) = feats[k];
    }
    out.emplace(s.sample_id, std::move(v));
  }
  return out;
}

std::string HeadToJson(const ProjectionHead& head) {
  auto row_major = [](const Matrix& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
  };
  nlohmann::ordered_json j;
  j["d_in"] = head.d_in();
  j["d_hid"] = head.d_hid();
  j["d_out"] = head.d_out();
  j["seed"] = head.seed;
  j["dropout_rate"] = head.dropout_rate;
  j["w1"] = row_major(head.w1);
  j["b1"] = std::vector<double>(head.b1.data(), head.b1.data() + head.b1.size());
  j["w2"] = row_major(head.w2);
  return j.dump();
}

ProjectionHead HeadFromJson(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  try {
    const int d_in = j.at("d_in").get<int>();
    const int d_hid = j.at("d_hid").get<int>();
    const int d_out = j.at("d_out").get<int>();
    const auto w1 = j.at("w1").get<std::vector<double>>();
    const auto b1 = j.at("b1").get<std::vector<double>>();
    const auto w2 = j.at("w2").get<std::vector<double>>();
    if (d_in < 1 || d_hid < 1 || d_out < 1 ||
        w1.size() != static_cast<std::size_t>(d_hid) * d_in ||
        b1.size() != static_cast<std::size_t>(d_hid) ||
        w2.size() != static_cast<std::size_t>(d_out) * d_hid) {
      throw InvariantError("head checkpoint arrays do not match dimensions");
    }
    ProjectionHead h;
    h.seed = j.at("seed").get<std::uint64_t>();
    h.dropout_rate = j.at("dropout_rate").get<double>();
    h.w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(w1.data(), d_hid, d_in);
    h.b1 = Eigen::Map<const Vector>(b1.data(), d_hid);
    h.w2 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(w2.data(), d_out, d_hid);
    h.Validate();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("bad head checkpoint: ") + e.what());
  }
}

void SaveHead(const std::string& path, const ProjectionHead& head) {
  WriteTextFile(path, HeadToJson(head) + "\n");
}

ProjectionHead LoadHead(const std::string& path) {
  return HeadFromJson(ReadTextFile(path));
}

std::string LossTraceCsv(const std::vector<double>& trace) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e, trace[e]);
    out += buf;
  }
  return out;
}

}  // namespace trail::contrastive
