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

#ifndef FAIRPROMPT_METRICS_H_
#define FAIRPROMPT_METRICS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairprompt/schema.h"

namespace fairprompt {

// Real vector produced by an embedder. Embedders are expected to return
// unit-norm vectors; `is_unit` checks that contract.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  // Scales `values` to unit L2 norm. Throws on a zero vector.
  static Embedding normalized(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double norm() const;
  bool is_unit(double tolerance = 1e-4) const;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

double dot(const Embedding& a, const Embedding& b);
double cosine(const Embedding& a, const Embedding& b);

// Category counts for one attribute. `categories` fixes k, including
// categories that were never observed.
struct CategoricalDistribution {
  std::vector<std::string> categories;
  std::vector<std::int64_t> counts;

  static CategoricalDistribution zeros(std::vector<std::string> categories);

  std::size_t k() const { return categories.size(); }
  std::int64_t total() const;
  std::int64_t count(std::string_view category) const;
  void add(std::string_view category, std::int64_t n = 1);

  bool operator==(const CategoricalDistribution&) const = default;
};

// -(1/log k) * sum p log p, clamped to [0, 1].
double normalized_entropy(const CategoricalDistribution& dist);
double normalized_entropy(std::span<const std::int64_t> counts);

// Mean cosine similarity over (image, prompt) pairs matched by index.
double clip_t(std::span<const Embedding> images,
              std::span<const Embedding> prompts);

double fairness_score(std::span<const double> entropies,
                      FairnessAggregation aggregation);

struct AttributeEntropy {
  std::string attribute;
  double value = 0.0;

  bool operator==(const AttributeEntropy&) const = default;
};

struct MetricSnapshot {
  std::vector<AttributeEntropy> per_attribute_entropy;  // schema order
  double clip_t = 0.0;
  double fairness_score = 0.0;

  double entropy(std::string_view attribute) const;
  bool operator==(const MetricSnapshot&) const = default;
};

// Builds a snapshot from per-attribute counts (schema order).
MetricSnapshot make_snapshot(std::span<const CategoricalDistribution> counts,
                             std::span<const std::string> attribute_names,
                             double clip_t_value,
                             FairnessAggregation aggregation);

// Unbiased MMD^2 with kernel exp(-|x-y|^2 / (2 bandwidth^2)).
double mmd2_rbf(std::span<const Embedding> x, std::span<const Embedding> y,
                double bandwidth);

// Median pairwise Euclidean distance over the union of both sets.
double median_bandwidth(std::span<const Embedding> x,
                        std::span<const Embedding> y);

// Unbiased MMD^2 with the cubic polynomial kernel (x.y/d + 1)^3.
double kid(std::span<const Embedding> x, std::span<const Embedding> y);

// Mean of `kid` over `num_subsets` seeded random subsets of size
// `subset_size` drawn without replacement from each set.
double kid_subsets(std::span<const Embedding> x, std::span<const Embedding> y,
                   std::size_t subset_size, std::size_t num_subsets,
                   std::uint64_t seed);

}  // namespace fairprompt

#endif  // FAIRPROMPT_METRICS_H_
