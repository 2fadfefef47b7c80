/* Copyright 2026 The fairprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fairprompt/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairprompt/common.h"

namespace fairprompt {

Embedding Embedding::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (!(sq > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  return Embedding(std::move(values));
}

double Embedding::norm() const {
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  return std::sqrt(sq);
}

bool Embedding::is_unit(double tolerance) const {
  return !values_.empty() && std::abs(norm() - 1.0) <= tolerance;
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding dimension mismatch (" + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()) + ")");
  }
  auto av = a.values();
  auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

double cosine(const Embedding& a, const Embedding& b) {
  const double d = dot(a, b);
  const double n = a.norm() * b.norm();
  if (!(n > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cosine of a zero vector");
  }
  return std::clamp(d / n, -1.0, 1.0);
}

// Distributions ----------------------------------------------------------------

CategoricalDistribution CategoricalDistribution::zeros(
    std::vector<std::string> categories) {
  CategoricalDistribution d;
  d.counts.assign(categories.size(), 0);
  d.categories = std::move(categories);
  return d;
}

std::int64_t CategoricalDistribution::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t CategoricalDistribution::count(std::string_view category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return counts[i];
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown category '" + std::string(category) + "'");
}

void CategoricalDistribution::add(std::string_view category, std::int64_t n) {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) {
      counts[i] += n;
      return;
    }
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown category '" + std::string(category) + "'");
}

double normalized_entropy(std::span<const std::int64_t> counts) {
  if (counts.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "normalized entropy needs k >= 2 categories");
  }
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw Error(ErrorCode::kInvalidArgument, "negative count");
    total += c;
  }
  if (total < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "normalized entropy of an empty distribution");
  }
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(counts.size())), 0.0, 1.0);
}

double normalized_entropy(const CategoricalDistribution& dist) {
  if (dist.counts.size() != dist.categories.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "counts and categories differ in length");
  }
  return normalized_entropy(std::span<const std::int64_t>(dist.counts));
}

double clip_t(std::span<const Embedding> images,
              std::span<const Embedding> prompts) {
  if (images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "CLIP-T of an empty pair list");
  }
  if (images.size() != prompts.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "image and prompt lists differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    sum += cosine(images[i], prompts[i]);
  }
  return sum / static_cast<double>(images.size());
}

double fairness_score(std::span<const double> entropies,
                      FairnessAggregation aggregation) {
  if (entropies.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "fairness score needs at least one entropy");
  }
  if (aggregation == FairnessAggregation::kMin) {
    return *std::min_element(entropies.begin(), entropies.end());
  }
  double sum = 0.0;
  for (double e : entropies) sum += e;
  return sum / static_cast<double>(entropies.size());
}

double MetricSnapshot::entropy(std::string_view attribute) const {
  for (const auto& e : per_attribute_entropy) {
    if (e.attribute == attribute) return e.value;
  }
  throw Error(ErrorCode::kNotFound,
              "no entropy for attribute '" + std::string(attribute) + "'");
}

MetricSnapshot make_snapshot(std::span<const CategoricalDistribution> counts,
                             std::span<const std::string> attribute_names,
                             double clip_t_value,
                             FairnessAggregation aggregation) {
  if (counts.size() != attribute_names.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "attribute names and distributions differ in length");
  }
  MetricSnapshot s;
  std::vector<double> values;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double h = normalized_entropy(counts[i]);
    s.per_attribute_entropy.push_back({attribute_names[i], h});
    values.push_back(h);
  }
  s.clip_t = clip_t_value;
  s.fairness_score = fairness_score(values, aggregation);
  return s;
}

// Kernel two-sample estimators -----------------------------------------------

namespace {

void check_sets(std::span<const Embedding> x, std::span<const Embedding> y) {
  if (x.size() < 2 || y.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "kernel estimators need at least two samples per set");
  }
  const std::size_t d = x[0].dim();
  for (auto set : {x, y}) {
    for (const auto& v : set) {
      if (v.dim() != d) {
        throw Error(ErrorCode::kInvalidArgument,
                    "embedding dimension mismatch within kernel inputs");
      }
    }
  }
}

double squared_distance(const Embedding& a, const Embedding& b) {
  auto av = a.values();
  auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  return s;
}

// Sum of kernel values over i<j within a set, doubled (the full off-diagonal
// sum of a symmetric Gram matrix). Row sums are accumulated in a fixed order.
template <class Kernel>
double off_diagonal_sum(std::span<const Embedding> s, const Kernel& k) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < s.size(); ++j) row += k(s[i], s[j]);
    total += row;
  }
  return 2.0 * total;
}

template <class Kernel>
double cross_sum(std::span<const Embedding> x, std::span<const Embedding> y,
                 const Kernel& k) {
  double total = 0.0;
  for (const auto& a : x) {
    double row = 0.0;
    for (const auto& b : y) row += k(a, b);
    total += row;
  }
  return total;
}

template <class Kernel>
double unbiased_mmd2(std::span<const Embedding> x, std::span<const Embedding> y,
                     const Kernel& k) {
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  const double kxx = off_diagonal_sum(x, k) / (m * (m - 1.0));
  const double kyy = off_diagonal_sum(y, k) / (n * (n - 1.0));
  const double kxy = cross_sum(x, y, k) / (m * n);
  return kxx + kyy - 2.0 * kxy;
}

}  // namespace

double mmd2_rbf(std::span<const Embedding> x, std::span<const Embedding> y,
                double bandwidth) {
  check_sets(x, y);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth must be positive");
  }
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  auto k = [inv](const Embedding& a, const Embedding& b) {
    return std::exp(-squared_distance(a, b) * inv);
  };
  return unbiased_mmd2(x, y, k);
}

double median_bandwidth(std::span<const Embedding> x,
                        std::span<const Embedding> y) {
  std::vector<const Embedding*> all;
  for (const auto& v : x) all.push_back(&v);
  for (const auto& v : y) all.push_back(&v);
  if (all.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "median bandwidth needs at least two vectors");
  }
  std::vector<double> dists;
  dists.reserve(all.size() * (all.size() - 1) / 2);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      dists.push_back(std::sqrt(squared_distance(*all[i], *all[j])));
    }
  }
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<long>(mid),
                   dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower =
        *std::max_element(dists.begin(), dists.begin() + static_cast<long>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "median pairwise distance is zero; bandwidth undefined");
  }
  return median;
}

double kid(std::span<const Embedding> x, std::span<const Embedding> y) {
  check_sets(x, y);
  const double inv_d = 1.0 / static_cast<double>(x[0].dim());
  auto k = [inv_d](const Embedding& a, const Embedding& b) {
    const double t = dot(a, b) * inv_d + 1.0;
    return t * t * t;
  };
  return unbiased_mmd2(x, y, k);
}

double kid_subsets(std::span<const Embedding> x, std::span<const Embedding> y,
                   std::size_t subset_size, std::size_t num_subsets,
                   std::uint64_t seed) {
  check_sets(x, y);
  if (subset_size < 2 || subset_size > x.size() || subset_size > y.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "subset size must be in [2, min(|X|, |Y|)]");
  }
  if (num_subsets == 0) {
    throw Error(ErrorCode::kInvalidArgument, "num_subsets must be positive");
  }
  std::mt19937_64 rng(substream_seed(seed, "kid-subsets"));
  auto draw = [&](std::span<const Embedding> set) {
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates with a library-independent index draw.
    for (std::size_t i = 0; i < subset_size; ++i) {
      const std::size_t span = idx.size() - i;
      const auto j = i + static_cast<std::size_t>(uniform01(rng) *
                                                  static_cast<double>(span));
      std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
    }
    std::vector<Embedding> out;
    out.reserve(subset_size);
    for (std::size_t i = 0; i < subset_size; ++i) out.push_back(set[idx[i]]);
    return out;
  };
  double sum = 0.0;
  for (std::size_t s = 0; s < num_subsets; ++s) {
    const auto xs = draw(x);
    const auto ys = draw(y);
    sum += kid(xs, ys);
  }
  return sum / static_cast<double>(num_subsets);
}

}  // namespace fairprompt
