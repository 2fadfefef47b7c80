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

#ifndef FAIRPROMPT_PREDICTOR_H_
#define FAIRPROMPT_PREDICTOR_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairprompt/metrics.h"
#include "fairprompt/schema.h"

namespace fairprompt {

class TextEmbedder;

// Prompt embeddings grouped by category, in schema order:
// embeddings[c][p] is the p-th prompt of category c.
struct CategoryPrompts {
  std::string attribute;
  std::vector<std::string> categories;
  std::vector<std::vector<Embedding>> embeddings;
};

using PromptEmbeddingMap = std::map<std::string, Embedding>;

struct CategoryScore {
  std::string category;
  double score = 0.0;

  bool operator==(const CategoryScore&) const = default;
};

// Per-category score is the max cosine over that category's prompts; the
// highest-scoring category wins and ties go to the earlier category.
CategoryScore classify_zero_shot(const Embedding& image,
                                 const CategoryPrompts& prompts);
CategoryScore classify_zero_shot(const Embedding& image,
                                 const AttributeDef& attribute,
                                 const PromptEmbeddingMap& prompt_embeddings);

// Global argmax over every attire prompt of every religion; returns the
// religion that owns the winning attire. Ties resolve by (religion order,
// attire order).
CategoryScore predict_religion(const Embedding& image,
                               const CategoryPrompts& attire);

CategoryPrompts make_category_prompts(const AttributeDef& attribute,
                                      const PromptEmbeddingMap& embeddings);
CategoryPrompts make_attire_prompts(const AttributeSchema& schema,
                                    const PromptEmbeddingMap& embeddings);

enum class ReligionMode { kAttire, kVanilla };

std::string_view to_string(ReligionMode mode);
ReligionMode parse_religion_mode(std::string_view text);

struct AttributeCall {
  std::string attribute;
  std::string category;
  double score = 0.0;

  bool operator==(const AttributeCall&) const = default;
};

// Where a profile came from: the whole image or the n-th face crop.
struct ProfileSource {
  std::optional<int> face_index;

  bool operator==(const ProfileSource&) const = default;
};

struct AttributeProfile {
  std::vector<AttributeCall> calls;  // schema order
  ProfileSource source;

  const AttributeCall& call(std::string_view attribute) const;
  bool operator==(const AttributeProfile&) const = default;
};

// Every schema prompt (classification and attire) embedded once.
class PromptBank {
 public:
  static PromptBank build(const AttributeSchema& schema,
                          const PromptEmbeddingMap& embeddings);
  static PromptBank embed(const AttributeSchema& schema,
                          TextEmbedder& embedder);

  const AttributeSchema& schema() const { return schema_; }
  const CategoryPrompts& attribute(std::size_t i) const { return direct_[i]; }
  const CategoryPrompts& attire() const { return attire_; }

 private:
  AttributeSchema schema_;
  std::vector<CategoryPrompts> direct_;
  CategoryPrompts attire_;
};

// All prompt strings of the schema, deduplicated, in a stable order.
std::vector<std::string> schema_prompt_texts(const AttributeSchema& schema);

AttributeProfile predict_profile(const Embedding& image, const PromptBank& bank,
                                 ReligionMode mode = ReligionMode::kAttire,
                                 ProfileSource source = {});

}  // namespace fairprompt

#endif  // FAIRPROMPT_PREDICTOR_H_
