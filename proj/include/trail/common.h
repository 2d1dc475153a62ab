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

#ifndef TRAIL_COMMON_H_
#define TRAIL_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trail {

// Invalid configuration or argument. Maps to CLI exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A required input file is missing or unreadable. Exit status 3.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& path, const std::string& what = "")
      : std::runtime_error(what.empty() ? "missing input: " + path : what),
        path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed data or a broken internal invariant. Exit status 4.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// 64-bit FNV-1a. Stable across platforms; used for token hashing and for
// content fingerprints of stage inputs.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t Fnv1a64(std::string_view data,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (char c : data) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

// SplitMix64-based generator. Unlike the <random> distributions its output
// sequence is fixed by the seed alone, on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = Next();
    } while (x >= limit);
    return x % n;
  }

  template <typename Container>
  void Shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(c[i - 1], c[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Ordinary least-squares line through (x[i], y[i]). Fewer than two distinct
// x values gives slope 0 and the mean of y as intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double x) const { return intercept + slope * x; }
};
LineFit FitLine(std::span<const double> x, std::span<const double> y);

// Whole-file read; throws InputError if the file cannot be opened.
std::string ReadTextFile(const std::string& path);
// Throws InputError if the file cannot be written.
void WriteTextFile(const std::string& path, std::string_view content);

// Splits on '\n', dropping a trailing '\r' from each line. A final empty
// line (text ending in '\n') is not returned.
std::vector<std::string> SplitLines(std::string_view text);

// Runs fn(i) for i in [0, n) on up to `threads` workers. fn must only write
// to state owned by index i.
void ParallelFor(std::size_t n, int threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace trail

#endif  // TRAIL_COMMON_H_
