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

#include <cmath>
#include <random>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "fairprompt/common.h"
#include "json.hpp"

namespace fairprompt {
namespace {

const std::string kOracleDir = FAIRPROMPT_SOURCE_DIR "/tests/oracles";

nlohmann::json load_oracle(const std::string& name) {
  return nlohmann::json::parse(read_text_file(kOracleDir + "/" + name));
}

TEST(EntropyTest, MatchesHighPrecisionOracle) {
  const auto j = load_oracle("entropy_values.json");
  ASSERT_FALSE(j["cases"].empty());
  for (const auto& c : j["cases"]) {
    const auto counts = c["counts"].get<std::vector<std::int64_t>>();
    const double want = std::stod(c["value"].get<std::string>());
    EXPECT_NEAR(normalized_entropy(counts), want, 1e-12) << c.dump();
  }
}

TEST(EntropyTest, Boundaries) {
  EXPECT_DOUBLE_EQ(normalized_entropy(std::vector<std::int64_t>{10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(normalized_entropy(std::vector<std::int64_t>{20, 0}), 0.0);
  EXPECT_DOUBLE_EQ(
      normalized_entropy(std::vector<std::int64_t>{5, 5, 5, 5}), 1.0);
  EXPECT_THROW(normalized_entropy(std::vector<std::int64_t>{0, 0}), Error);
  EXPECT_THROW(normalized_entropy(std::vector<std::int64_t>{3}), Error);
  EXPECT_THROW(normalized_entropy(std::vector<std::int64_t>{3, -1}), Error);
}

TEST(EntropyTest, UnobservedCategoriesStillCountTowardsK) {
  auto d = CategoricalDistribution::zeros({"a", "b", "c", "d"});
  d.add("a", 5);
  d.add("b", 5);
  EXPECT_NEAR(normalized_entropy(d), std::log(2.0) / std::log(4.0), 1e-15);
  EXPECT_EQ(d.total(), 10);
  EXPECT_EQ(d.count("c"), 0);
  EXPECT_THROW(d.add("z"), Error);
}

TEST(EntropyTest, RandomCountsStayInUnitInterval) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    std::vector<std::int64_t> counts(k);
    std::int64_t total = 0;
    for (auto& c : counts) total += (c = static_cast<std::int64_t>(rng() % 50));
    if (total == 0) counts[0] = 1;
    const double h = normalized_entropy(counts);
    ASSERT_GE(h, 0.0);
    ASSERT_LE(h, 1.0);
  }
}

Embedding vec(std::vector<double> v) { return Embedding::normalized(v); }

TEST(ClipTTest, MeanCosine) {
  const std::vector<Embedding> images = {vec({1, 0}), vec({1, 1})};
  const std::vector<Embedding> prompts = {vec({1, 0}), vec({1, 0})};
  EXPECT_NEAR(clip_t(images, prompts), (1.0 + std::sqrt(0.5)) / 2.0, 1e-15);
  const std::vector<Embedding> opposite = {vec({-1, 0}), vec({-1, -1})};
  EXPECT_NEAR(clip_t(opposite, prompts), -(1.0 + std::sqrt(0.5)) / 2.0, 1e-15);
  EXPECT_THROW(clip_t({}, {}), Error);
  EXPECT_THROW(clip_t(images, std::vector<Embedding>{vec({1, 0})}), Error);
  EXPECT_THROW(clip_t(std::vector<Embedding>{vec({1, 0, 0})},
                      std::vector<Embedding>{vec({1, 0})}),
               Error);
}

TEST(EmbeddingTest, Normalization) {
  EXPECT_TRUE(vec({3, 4}).is_unit());
  EXPECT_NEAR(vec({3, 4}).values()[0], 0.6, 1e-15);
  EXPECT_FALSE(Embedding({3, 4}).is_unit());
  EXPECT_THROW(Embedding::normalized({0, 0}), Error);
}

TEST(FairnessTest, Aggregation) {
  const std::vector<double> h = {0.2, 0.8, 0.5};
  EXPECT_DOUBLE_EQ(fairness_score(h, FairnessAggregation::kMean), 0.5);
  EXPECT_DOUBLE_EQ(fairness_score(h, FairnessAggregation::kMin), 0.2);
  EXPECT_THROW(fairness_score({}, FairnessAggregation::kMean), Error);
}

TEST(FairnessTest, Snapshot) {
  auto g = CategoricalDistribution::zeros({"female", "male"});
  g.add("female", 10);
  g.add("male", 10);
  auto a = CategoricalDistribution::zeros({"young", "old"});
  a.add("young", 20);
  const std::vector<CategoricalDistribution> counts = {g, a};
  const std::vector<std::string> names = {"gender", "age"};
  const MetricSnapshot s =
      make_snapshot(counts, names, 0.3, FairnessAggregation::kMean);
  EXPECT_DOUBLE_EQ(s.entropy("gender"), 1.0);
  EXPECT_DOUBLE_EQ(s.entropy("age"), 0.0);
  EXPECT_DOUBLE_EQ(s.fairness_score, 0.5);
  EXPECT_DOUBLE_EQ(s.clip_t, 0.3);
  EXPECT_THROW(s.entropy("race"), Error);
}

// Same integer formula as tests/oracles/kernel_oracle.py.
std::vector<Embedding> oracle_points(int count, int salt, int dim) {
  std::vector<Embedding> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> v(dim);
    for (int d = 0; d < dim; ++d) {
      v[d] = static_cast<double>(((i * 7 + d * 3 + salt) % 11) - 5) / 5.0;
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

TEST(KernelTest, MatchesHighPrecisionOracle) {
  const auto j = load_oracle("kernel_values.json");
  const int dim = j["dim"].get<int>();
  for (const auto& c : j["cases"]) {
    const auto x = oracle_points(c["m"], c["salt_x"], dim);
    const auto y = oracle_points(c["n"], c["salt_y"], dim);
    const double bw = median_bandwidth(x, y);
    EXPECT_NEAR(bw, std::stod(c["bandwidth"].get<std::string>()), 1e-12);
    EXPECT_NEAR(mmd2_rbf(x, y, bw), std::stod(c["mmd2_rbf"].get<std::string>()),
                1e-12)
        << c.dump();
    EXPECT_NEAR(kid(x, y), std::stod(c["kid"].get<std::string>()), 1e-12)
        << c.dump();
  }
}

// Full Gram matrices in long double, no shared code with the library.
long double brute_mmd2(const std::vector<Embedding>& x,
                       const std::vector<Embedding>& y, bool cubic,
                       long double bandwidth) {
  auto k = [&](const Embedding& a, const Embedding& b) -> long double {
    long double dot = 0, sq = 0;
    for (std::size_t d = 0; d < a.dim(); ++d) {
      const long double p = a.values()[d], q = b.values()[d];
      dot += p * q;
      sq += (p - q) * (p - q);
    }
    if (cubic) {
      const long double t = dot / static_cast<long double>(a.dim()) + 1;
      return t * t * t;
    }
    return std::exp(-sq / (2 * bandwidth * bandwidth));
  };
  const long double m = x.size(), n = y.size();
  long double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) sxx += k(x[i], x[j]);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (i != j) syy += k(y[i], y[j]);
  for (const auto& a : x)
    for (const auto& b : y) sxy += k(a, b);
  return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2 * sxy / (m * n);
}

std::vector<Embedding> gaussian_set(std::size_t n, std::size_t dim,
                                    double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng) + shift;
    out.push_back(Embedding::normalized(std::move(v)));
  }
  return out;
}

TEST(KernelTest, AgreesWithBruteForceUpTo500) {
  for (std::size_t n : {2u, 10u, 100u, 500u}) {
    const auto x = gaussian_set(n, 8, 0.0, n);
    const auto y = gaussian_set(n + 3, 8, 0.3, n + 1);
    const double bw = median_bandwidth(x, y);
    EXPECT_NEAR(mmd2_rbf(x, y, bw), static_cast<double>(brute_mmd2(x, y, false, bw)),
                1e-9)
        << n;
    EXPECT_NEAR(kid(x, y), static_cast<double>(brute_mmd2(x, y, true, 0)), 1e-9)
        << n;
  }
}

TEST(KernelTest, SelfComparisonNearZero) {
  for (std::size_t n : {50u, 200u}) {
    const auto x = gaussian_set(n, 8, 0.0, 11);
    const double bound = 2.0 / static_cast<double>(n);
    const double m = mmd2_rbf(x, x, median_bandwidth(x, x));
    EXPECT_LE(m, 0.0);
    EXPECT_LE(std::abs(m), bound);
    const double k = kid(x, x);
    EXPECT_LE(k, 0.0);
    EXPECT_LE(std::abs(k), bound);
  }
}

TEST(KernelTest, SeparatesShiftedDistributions) {
  const auto x = gaussian_set(200, 8, 0.0, 1);
  const auto same = gaussian_set(200, 8, 0.0, 2);
  const auto far = gaussian_set(200, 8, 1.0, 3);
  const double bw = median_bandwidth(x, far);
  EXPECT_GT(mmd2_rbf(x, far, bw), 10 * std::abs(mmd2_rbf(x, same, bw)));
  EXPECT_GT(kid(x, far), 10 * std::abs(kid(x, same)));
}

TEST(KernelTest, SymmetricInArguments) {
  const auto x = gaussian_set(30, 4, 0.0, 5);
  const auto y = gaussian_set(40, 4, 0.5, 6);
  EXPECT_NEAR(kid(x, y), kid(y, x), 1e-12);
  EXPECT_NEAR(mmd2_rbf(x, y, 0.7), mmd2_rbf(y, x, 0.7), 1e-12);
}

TEST(KernelTest, InputValidation) {
  const auto x = gaussian_set(5, 4, 0.0, 1);
  const std::vector<Embedding> one = {x[0]};
  EXPECT_THROW(kid(one, x), Error);
  EXPECT_THROW(mmd2_rbf(x, x, 0.0), Error);
  const std::vector<Embedding> dup = {x[0], x[0]};
  EXPECT_THROW(median_bandwidth(dup, dup), Error);
  EXPECT_THROW(kid_subsets(x, x, 6, 1, 0), Error);
  EXPECT_THROW(kid_subsets(x, x, 3, 0, 0), Error);
}

TEST(KernelTest, SubsetsAreSeededAndFullSubsetMatchesKid) {
  const auto x = gaussian_set(60, 4, 0.0, 7);
  const auto y = gaussian_set(60, 4, 0.2, 8);
  EXPECT_EQ(kid_subsets(x, y, 20, 5, 99), kid_subsets(x, y, 20, 5, 99));
  EXPECT_NE(kid_subsets(x, y, 20, 5, 99), kid_subsets(x, y, 20, 5, 100));
  // A subset of the whole set is a permutation; the estimator is invariant.
  EXPECT_NEAR(kid_subsets(x, y, 60, 1, 3), kid(x, y), 1e-12);
}

}  // namespace
}  // namespace fairprompt
