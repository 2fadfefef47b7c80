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

#include "fairprompt/predictor.h"

#include <limits>
#include <set>

#include "fairprompt/backends.h"
#include "fairprompt/common.h"

namespace fairprompt {

namespace {

CategoryScore argmax_over_prompts(const Embedding& image,
                                  const CategoryPrompts& prompts) {
  if (prompts.categories.empty() ||
      prompts.categories.size() != prompts.embeddings.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "malformed prompt bank for '" + prompts.attribute + "'");
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < prompts.categories.size(); ++c) {
    if (prompts.embeddings[c].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "category has no prompt embeddings",
                  prompts.attribute + "." + prompts.categories[c]);
    }
    double category_score = -std::numeric_limits<double>::infinity();
    for (const auto& e : prompts.embeddings[c]) {
      category_score = std::max(category_score, cosine(image, e));
    }
    if (category_score > best_score) {
      best_score = category_score;
      best = c;
    }
  }
  return {prompts.categories[best], best_score};
}

const Embedding& lookup(const PromptEmbeddingMap& map, const std::string& text,
                        const std::string& key_path) {
  auto it = map.find(text);
  if (it == map.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "missing embedding for prompt '" + text + "'", key_path);
  }
  return it->second;
}

}  // namespace

CategoryScore classify_zero_shot(const Embedding& image,
                                 const CategoryPrompts& prompts) {
  return argmax_over_prompts(image, prompts);
}

CategoryScore classify_zero_shot(const Embedding& image,
                                 const AttributeDef& attribute,
                                 const PromptEmbeddingMap& prompt_embeddings) {
  return argmax_over_prompts(image,
                             make_category_prompts(attribute, prompt_embeddings));
}

CategoryScore predict_religion(const Embedding& image,
                               const CategoryPrompts& attire) {
  // Max-per-religion followed by a first-wins argmax is the same as the
  // first-wins global argmax over the flattened (religion, attire) list.
  return argmax_over_prompts(image, attire);
}

CategoryPrompts make_category_prompts(const AttributeDef& attribute,
                                      const PromptEmbeddingMap& embeddings) {
  CategoryPrompts out{attribute.name, attribute.categories, {}};
  for (const auto& cat : attribute.categories) {
    auto it = attribute.prompts.find(cat);
    if (it == attribute.prompts.end() || it->second.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "category has no prompts",
                  attribute.name + "." + cat);
    }
    std::vector<Embedding> row;
    for (const auto& p : it->second) {
      row.push_back(lookup(embeddings, p, attribute.name + "." + cat));
    }
    out.embeddings.push_back(std::move(row));
  }
  return out;
}

CategoryPrompts make_attire_prompts(const AttributeSchema& schema,
                                    const PromptEmbeddingMap& embeddings) {
  const AttributeDef& rel = schema.religion();
  CategoryPrompts out{rel.name, rel.categories, {}};
  for (const auto& cat : rel.categories) {
    auto it = schema.religion_attire.find(cat);
    if (it == schema.religion_attire.end() || it->second.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty attire set",
                  "religion_attire." + cat);
    }
    std::vector<Embedding> row;
    for (const auto& p : it->second) {
      row.push_back(lookup(embeddings, p, "religion_attire." + cat));
    }
    out.embeddings.push_back(std::move(row));
  }
  return out;
}

std::string_view to_string(ReligionMode mode) {
  return mode == ReligionMode::kVanilla ? "vanilla" : "attire";
}

ReligionMode parse_religion_mode(std::string_view text) {
  if (text == "attire") return ReligionMode::kAttire;
  if (text == "vanilla") return ReligionMode::kVanilla;
  throw Error(ErrorCode::kInvalidArgument,
              "religion mode must be 'attire' or 'vanilla'");
}

const AttributeCall& AttributeProfile::call(std::string_view attribute) const {
  for (const auto& c : calls) {
    if (c.attribute == attribute) return c;
  }
  throw Error(ErrorCode::kNotFound,
              "profile has no attribute '" + std::string(attribute) + "'");
}

std::vector<std::string> schema_prompt_texts(const AttributeSchema& schema) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& s) {
    if (seen.insert(s).second) out.push_back(s);
  };
  for (const auto& a : schema.attributes) {
    for (const auto& cat : a.categories) {
      auto it = a.prompts.find(cat);
      if (it == a.prompts.end()) continue;
      for (const auto& p : it->second) push(p);
    }
  }
  for (const auto& cat : schema.religion().categories) {
    auto it = schema.religion_attire.find(cat);
    if (it == schema.religion_attire.end()) continue;
    for (const auto& p : it->second) push(p);
  }
  return out;
}

PromptBank PromptBank::build(const AttributeSchema& schema,
                             const PromptEmbeddingMap& embeddings) {
  PromptBank bank;
  bank.schema_ = schema;
  for (const auto& a : schema.attributes) {
    bank.direct_.push_back(make_category_prompts(a, embeddings));
  }
  bank.attire_ = make_attire_prompts(schema, embeddings);
  return bank;
}

PromptBank PromptBank::embed(const AttributeSchema& schema,
                             TextEmbedder& embedder) {
  const auto texts = schema_prompt_texts(schema);
  const auto vectors = embedder.embed(texts);
  PromptEmbeddingMap map;
  for (std::size_t i = 0; i < texts.size(); ++i) map.emplace(texts[i], vectors[i]);
  return build(schema, map);
}

AttributeProfile predict_profile(const Embedding& image, const PromptBank& bank,
                                 ReligionMode mode, ProfileSource source) {
  AttributeProfile profile;
  profile.source = source;
  const AttributeSchema& schema = bank.schema();
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const AttributeDef& a = schema.attributes[i];
    CategoryScore s = (a.is_religion && mode == ReligionMode::kAttire)
                          ? predict_religion(image, bank.attire())
                          : classify_zero_shot(image, bank.attribute(i));
    profile.calls.push_back({a.name, std::move(s.category), s.score});
  }
  return profile;
}

}  // namespace fairprompt
