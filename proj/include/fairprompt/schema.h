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

#ifndef FAIRPROMPT_SCHEMA_H_
#define FAIRPROMPT_SCHEMA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fairprompt {

// One demographic attribute and the zero-shot prompts for each category.
struct AttributeDef {
  std::string name;
  std::vector<std::string> categories;
  std::map<std::string, std::vector<std::string>> prompts;
  bool is_religion = false;

  // Index of `category` in `categories`, or -1.
  int index_of(std::string_view category) const;

  bool operator==(const AttributeDef&) const = default;
};

// The attribute universe. Exactly one attribute carries `is_religion`; its
// categories are predicted from `religion_attire` rather than from `prompts`
// unless the vanilla religion mode is selected.
struct AttributeSchema {
  std::vector<AttributeDef> attributes;
  std::map<std::string, std::vector<std::string>> religion_attire;

  static AttributeSchema defaults();

  // Throws Error(kConfig) naming the offending key path.
  void validate() const;

  const AttributeDef& attribute(std::string_view name) const;
  std::size_t religion_index() const;
  const AttributeDef& religion() const {
    return attributes[religion_index()];
  }

  // Canonical text form (sorted keys, two-space indent, trailing newline).
  std::string canonical() const;
  std::string digest() const;

  bool operator==(const AttributeSchema&) const = default;
};

AttributeSchema parse_schema(std::string_view text);
AttributeSchema load_schema(const std::filesystem::path& path);
void save_schema(const AttributeSchema& schema,
                 const std::filesystem::path& path);

struct ProfessionArea {
  std::vector<std::string> cot_gen;
  std::vector<std::string> test;

  bool operator==(const ProfessionArea&) const = default;
};

struct ProfessionAreaMap {
  std::map<std::string, ProfessionArea> areas;

  static ProfessionAreaMap defaults();
  void validate() const;
  std::string canonical() const;

  bool operator==(const ProfessionAreaMap&) const = default;
};

ProfessionAreaMap parse_profession_areas(std::string_view text);
ProfessionAreaMap load_profession_areas(const std::filesystem::path& path);

// Case-insensitive exact match over both CoT-generation and test professions.
std::optional<std::string> area_of(std::string_view profession,
                                   const ProfessionAreaMap& map);

enum class FairnessAggregation { kMean, kMin };

std::string_view to_string(FairnessAggregation agg);
FairnessAggregation parse_aggregation(std::string_view text);

inline constexpr std::string_view kDefaultCot0 =
    "Think step by step before generating images while considering several "
    "races, genders, religions, and ages, and treating people of these "
    "categories equally.";
inline constexpr std::string_view kDefaultRefinePrompt =
    "Can you think again? Consider generating images of different religions, "
    "races, ages, and genders.";

struct RunConfig {
  int images_per_prompt = 20;
  double tau = 0.9;
  int max_iterations = 8;
  std::uint64_t rng_seed = 0;
  std::string cot0_text{kDefaultCot0};
  std::string refine_prompt_text{kDefaultRefinePrompt};
  FairnessAggregation fairness_aggregation = FairnessAggregation::kMean;
  // Whether the religion "Neutral" category counts towards k.
  bool neutral_in_religion_entropy = true;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const AttributeSchema& schema);
nlohmann::json to_json(const ProfessionAreaMap& map);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fairprompt

#endif  // FAIRPROMPT_SCHEMA_H_
