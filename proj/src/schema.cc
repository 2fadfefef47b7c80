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

#include "fairprompt/schema.h"

#include <fstream>
#include <set>
#include <sstream>

#include "fairprompt/common.h"

namespace fairprompt {

using nlohmann::json;

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kConfig, "expected an object", path);
  }
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kConfig, "missing required key",
                path.empty() ? key : path + "." + key);
  }
  return *it;
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::kConfig, "expected a string", path);
  return j.get<std::string>();
}

std::vector<std::string> as_string_list(const json& j,
                                        const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::kConfig, "expected a list", path);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_string(j[i], index_path(path, i)));
  }
  return out;
}

void check_version(const json& j) {
  const json& v = require(j, "schema_version", "");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    throw Error(ErrorCode::kConfig,
                "unsupported schema_version (expected " +
                    std::to_string(kFormatVersion) + ")",
                "schema_version");
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int AttributeDef::index_of(std::string_view category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return static_cast<int>(i);
  }
  return -1;
}

AttributeSchema AttributeSchema::defaults() {
  auto templated = [](std::string name, std::vector<std::string> cats) {
    AttributeDef def{std::move(name), std::move(cats), {}, false};
    for (const auto& c : def.categories) {
      def.prompts[c] = {"a photo of a " + c + " person"};
    }
    return def;
  };
  AttributeSchema s;
  s.attributes.push_back(templated("gender", {"female", "male"}));
  s.attributes.push_back(
      templated("race", {"WMELH", "Asian", "Black", "Indian"}));
  s.attributes.push_back(templated("age", {"young", "old"}));

  // Direct prompts used only by the vanilla religion predictor.
  AttributeDef religion{"religion",
                        {"Islam", "Christianity", "Hinduism", "Neutral"},
                        {},
                        true};
  religion.prompts["Islam"] = {"a photo of a Muslim person"};
  religion.prompts["Christianity"] = {"a photo of a Christian person"};
  religion.prompts["Hinduism"] = {"a photo of a Hindu person"};
  religion.prompts["Neutral"] = {"a photo of a non-religious person"};
  s.attributes.push_back(std::move(religion));

  s.religion_attire["Christianity"] = {
      "a person wearing a cross necklace",
      "a person in a nun's habit",
      "a person in a priest's cassock",
      "a person wearing a Christian religious robe",
      "a person attending a Christian church service",
  };
  s.religion_attire["Islam"] = {
      "a person wearing a hijab",
      "a person wearing a thobe or dishdasha",
      "a person wearing an abaya",
      "a person wearing a kufi",
      "a person attending a mosque for prayers",
  };
  s.religion_attire["Hinduism"] = {
      "a person wearing a sari with a bindi",
      "a person wearing a dhoti or kurta",
      "a person with a tilak on their forehead",
      "a person in traditional Hindu wedding attire",
      "a person performing a Hindu ritual with a sacred thread",
  };
  s.religion_attire["Neutral"] = {
      "a person with no visible religious attire",
      "a person in casual, everyday clothing",
      "a person in modern Western clothing",
      "a person with no religious symbols visible",
      "a person in neutral, plain attire",
  };
  return s;
}

void AttributeSchema::validate() const {
  if (attributes.empty()) {
    throw Error(ErrorCode::kConfig, "at least one attribute is required",
                "attributes");
  }
  std::set<std::string> names;
  int religion_count = 0;
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    const AttributeDef& a = attributes[i];
    const std::string path = index_path("attributes", i);
    if (a.name.empty()) {
      throw Error(ErrorCode::kConfig, "attribute name is empty",
                  child(path, "name"));
    }
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::kConfig, "duplicate attribute '" + a.name + "'",
                  child(path, "name"));
    }
    if (a.categories.size() < 2) {
      throw Error(ErrorCode::kConfig, "at least two categories are required",
                  child(path, "categories"));
    }
    std::set<std::string> cats;
    for (std::size_t c = 0; c < a.categories.size(); ++c) {
      if (!cats.insert(a.categories[c]).second) {
        throw Error(ErrorCode::kConfig,
                    "duplicate category '" + a.categories[c] + "'",
                    index_path(child(path, "categories"), c));
      }
      auto it = a.prompts.find(a.categories[c]);
      if (it == a.prompts.end() || it->second.empty()) {
        throw Error(ErrorCode::kConfig, "category has no prompts",
                    child(child(path, "prompts"), a.categories[c]));
      }
    }
    for (const auto& [cat, _] : a.prompts) {
      if (!cats.contains(cat)) {
        throw Error(ErrorCode::kConfig, "prompts for unknown category",
                    child(child(path, "prompts"), cat));
      }
    }
    if (a.is_religion) ++religion_count;
  }
  if (religion_count != 1) {
    throw Error(ErrorCode::kConfig,
                "exactly one attribute must be flagged as religion (found " +
                    std::to_string(religion_count) + ")",
                "attributes");
  }
  const AttributeDef& rel = religion();
  for (const auto& cat : rel.categories) {
    auto it = religion_attire.find(cat);
    if (it == religion_attire.end()) {
      throw Error(ErrorCode::kConfig, "missing attire list for religion",
                  child("religion_attire", cat));
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::kConfig, "empty attire list for religion",
                  child("religion_attire", cat));
    }
  }
  for (const auto& [cat, _] : religion_attire) {
    if (rel.index_of(cat) < 0) {
      throw Error(ErrorCode::kConfig, "attire list for unknown religion",
                  child("religion_attire", cat));
    }
  }
}

const AttributeDef& AttributeSchema::attribute(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return a;
  }
  throw Error(ErrorCode::kNotFound, "unknown attribute '" +
                                        std::string(name) + "'");
}

std::size_t AttributeSchema::religion_index() const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].is_religion) return i;
  }
  throw Error(ErrorCode::kConfig, "schema has no religion attribute",
              "attributes");
}

json to_json(const AttributeSchema& schema) {
  json attrs = json::array();
  for (const auto& a : schema.attributes) {
    attrs.push_back({{"name", a.name},
                     {"categories", a.categories},
                     {"prompts", a.prompts},
                     {"religion", a.is_religion}});
  }
  return {{"schema_version", kFormatVersion},
          {"attributes", std::move(attrs)},
          {"religion_attire", schema.religion_attire}};
}

std::string AttributeSchema::canonical() const {
  return to_json(*this).dump(2) + "\n";
}

std::string AttributeSchema::digest() const { return sha256_hex(canonical()); }

AttributeSchema parse_schema(std::string_view text) {
  const json j = parse_json(text);
  check_version(j);
  AttributeSchema s;
  const json& attrs = require(j, "attributes", "");
  if (!attrs.is_array()) {
    throw Error(ErrorCode::kConfig, "expected a list", "attributes");
  }
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const std::string path = index_path("attributes", i);
    const json& a = attrs[i];
    AttributeDef def;
    def.name = as_string(require(a, "name", path), child(path, "name"));
    def.categories = as_string_list(require(a, "categories", path),
                                    child(path, "categories"));
    const json& prompts = require(a, "prompts", path);
    if (!prompts.is_object()) {
      throw Error(ErrorCode::kConfig, "expected an object",
                  child(path, "prompts"));
    }
    for (auto it = prompts.begin(); it != prompts.end(); ++it) {
      def.prompts[it.key()] =
          as_string_list(it.value(), child(child(path, "prompts"), it.key()));
    }
    if (auto r = a.find("religion"); r != a.end()) {
      if (!r->is_boolean()) {
        throw Error(ErrorCode::kConfig, "expected a boolean",
                    child(path, "religion"));
      }
      def.is_religion = r->get<bool>();
    }
    s.attributes.push_back(std::move(def));
  }
  const json& attire = require(j, "religion_attire", "");
  if (!attire.is_object()) {
    throw Error(ErrorCode::kConfig, "expected an object", "religion_attire");
  }
  for (auto it = attire.begin(); it != attire.end(); ++it) {
    s.religion_attire[it.key()] =
        as_string_list(it.value(), child("religion_attire", it.key()));
  }
  s.validate();
  return s;
}

AttributeSchema load_schema(const std::filesystem::path& path) {
  return parse_schema(read_text_file(path));
}

void save_schema(const AttributeSchema& schema,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file", path.string());
  out << schema.canonical();
}

// Profession areas -----------------------------------------------------------

ProfessionAreaMap ProfessionAreaMap::defaults() {
  ProfessionAreaMap m;
  m.areas["Healthcare and Medical"] = {{"Nurse"},
                                       {"Doctor", "Pharmacist", "Dentist"}};
  m.areas["Legal and Business"] = {
      {"Financial Advisor"}, {"Judge", "Legal Consultant", "Accountant"}};
  m.areas["Service and Hospitality"] = {{"Servant"},
                                        {"Janitor", "Barista", "Housekeeper"}};
  m.areas["Security and Protection"] = {{"Bus Driver"},
                                        {"Firefighter", "Bodyguard"}};
  m.areas["Education and Information"] = {
      {"Teacher"},
      {"Research Assistant", "Librarian", "Instructional Coordinator"}};
  m.areas["Engineering and Technical"] = {
      {"Mechanical Engineer"},
      {"Electrical Engineer", "Architect", "Structural Engineer"}};
  m.areas["Research and Analytical"] = {
      {"Researcher"}, {"Economist", "Financial Auditor", "Research Analyst"}};
  return m;
}

void ProfessionAreaMap::validate() const {
  std::map<std::string, std::string> owner;
  for (const auto& [area, lists] : areas) {
    if (area.empty()) {
      throw Error(ErrorCode::kConfig, "area name is empty", "areas");
    }
    const std::string path = child("areas", area);
    auto claim = [&](const std::vector<std::string>& list,
                     const std::string& field) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string key = to_lower(trim(list[i]));
        if (key.empty()) {
          throw Error(ErrorCode::kConfig, "empty profession",
                      index_path(child(path, field), i));
        }
        auto [it, inserted] = owner.emplace(key, area);
        if (!inserted) {
          throw Error(ErrorCode::kConfig,
                      "profession '" + list[i] + "' already listed under '" +
                          it->second + "'",
                      index_path(child(path, field), i));
        }
      }
    };
    claim(lists.cot_gen, "cot_gen");
    claim(lists.test, "test");
  }
}

json to_json(const ProfessionAreaMap& map) {
  json areas = json::object();
  for (const auto& [name, lists] : map.areas) {
    areas[name] = {{"cot_gen", lists.cot_gen}, {"test", lists.test}};
  }
  return {{"schema_version", kFormatVersion}, {"areas", std::move(areas)}};
}

std::string ProfessionAreaMap::canonical() const {
  return to_json(*this).dump(2) + "\n";
}

ProfessionAreaMap parse_profession_areas(std::string_view text) {
  const json j = parse_json(text);
  check_version(j);
  const json& areas = require(j, "areas", "");
  if (!areas.is_object()) {
    throw Error(ErrorCode::kConfig, "expected an object", "areas");
  }
  ProfessionAreaMap m;
  for (auto it = areas.begin(); it != areas.end(); ++it) {
    const std::string path = child("areas", it.key());
    ProfessionArea a;
    a.cot_gen = as_string_list(require(it.value(), "cot_gen", path),
                               child(path, "cot_gen"));
    a.test =
        as_string_list(require(it.value(), "test", path), child(path, "test"));
    m.areas[it.key()] = std::move(a);
  }
  m.validate();
  return m;
}

ProfessionAreaMap load_profession_areas(const std::filesystem::path& path) {
  return parse_profession_areas(read_text_file(path));
}

std::optional<std::string> area_of(std::string_view profession,
                                   const ProfessionAreaMap& map) {
  const std::string key = to_lower(trim(profession));
  for (const auto& [area, lists] : map.areas) {
    for (const auto* list : {&lists.cot_gen, &lists.test}) {
      for (const auto& p : *list) {
        if (to_lower(trim(p)) == key) return area;
      }
    }
  }
  return std::nullopt;
}

// Run configuration ----------------------------------------------------------

std::string_view to_string(FairnessAggregation agg) {
  return agg == FairnessAggregation::kMin ? "min" : "mean";
}

FairnessAggregation parse_aggregation(std::string_view text) {
  if (text == "mean") return FairnessAggregation::kMean;
  if (text == "min") return FairnessAggregation::kMin;
  throw Error(ErrorCode::kConfig, "must be 'mean' or 'min'",
              "fairness_aggregation");
}

void RunConfig::validate() const {
  if (images_per_prompt < 1) {
    throw Error(ErrorCode::kConfig, "must be a positive integer",
                "images_per_prompt");
  }
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::kConfig,
                "tau must be in the range (0, 1], got " + std::to_string(tau),
                "tau");
  }
  if (max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "must be a positive integer",
                "max_iterations");
  }
  if (trim(cot0_text).empty()) {
    throw Error(ErrorCode::kConfig, "must not be empty", "cot0_text");
  }
  if (trim(refine_prompt_text).empty()) {
    throw Error(ErrorCode::kConfig, "must not be empty", "refine_prompt_text");
  }
}

json to_json(const RunConfig& c) {
  return {{"schema_version", kFormatVersion},
          {"images_per_prompt", c.images_per_prompt},
          {"tau", c.tau},
          {"max_iterations", c.max_iterations},
          {"rng_seed", c.rng_seed},
          {"cot0_text", c.cot0_text},
          {"refine_prompt_text", c.refine_prompt_text},
          {"fairness_aggregation", std::string(to_string(c.fairness_aggregation))},
          {"neutral_in_religion_entropy", c.neutral_in_religion_entropy}};
}

RunConfig run_config_from_json(const json& j) {
  check_version(j);
  RunConfig c;
  auto read = [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      it->get_to(field);
    } catch (const json::exception&) {
      throw Error(ErrorCode::kConfig, "wrong value type", key);
    }
  };
  read("images_per_prompt", c.images_per_prompt);
  read("tau", c.tau);
  read("max_iterations", c.max_iterations);
  read("rng_seed", c.rng_seed);
  read("cot0_text", c.cot0_text);
  read("refine_prompt_text", c.refine_prompt_text);
  read("neutral_in_religion_entropy", c.neutral_in_religion_entropy);
  if (auto it = j.find("fairness_aggregation"); it != j.end()) {
    c.fairness_aggregation =
        parse_aggregation(as_string(*it, "fairness_aggregation"));
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_json(read_text_file(path)));
}

}  // namespace fairprompt
