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

#ifndef FAIRPROMPT_POOL_H_
#define FAIRPROMPT_POOL_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/metrics.h"
#include "fairprompt/refine.h"
#include "fairprompt/schema.h"
#include "json.hpp"

namespace fairprompt {

struct CoTRecord {
  std::string id;
  std::string cot_text;
  std::string profession;
  std::optional<std::string> area;
  std::vector<std::string> prompts;
  MetricSnapshot metrics;
  std::string run_id;
  int iteration = 0;
  std::string created_at;

  bool operator==(const CoTRecord&) const = default;
};

nlohmann::json to_json(const CoTRecord& record);
CoTRecord cot_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricSnapshot& snapshot);
MetricSnapshot metric_snapshot_from_json(const nlohmann::json& j);

// Append-only archive of converged CoTs, persisted as JSON lines. Every save
// rewrites the whole log to a temporary file, syncs it and renames it over
// the previous log, so a crash leaves either the old or the new pool.
class DemonstrationPool {
 public:
  DemonstrationPool() = default;
  explicit DemonstrationPool(std::filesystem::path path) : path_(std::move(path)) {}

  // Loads `path`; a missing file yields an empty pool bound to that path.
  static DemonstrationPool load(const std::filesystem::path& path);

  const std::vector<CoTRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const CoTRecord* find(std::string_view id) const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

  // Appends the selected CoT of `result` and persists the pool. On I/O
  // failure the pool is left unchanged.
  const CoTRecord& archive(const RefinementResult& result,
                           const std::string& run_id,
                           const ProfessionAreaMap& areas);
  const CoTRecord& append(CoTRecord record);

  std::string serialize() const;

  // Test hook run after the temporary file is written and before the rename.
  std::function<void()> before_rename;

 private:
  void persist(const std::vector<CoTRecord>& records);

  std::optional<std::filesystem::path> path_;
  std::vector<CoTRecord> records_;
};

enum class SelectionStrategy { kRandom, kCosine, kArea };

std::string_view to_string(SelectionStrategy strategy);
SelectionStrategy parse_selection_strategy(std::string_view text);

struct Selection {
  std::size_t index = 0;
  // Strategy that produced the choice; area falls back to cosine.
  SelectionStrategy used = SelectionStrategy::kArea;
  std::string note;
};

// random draws from the "selection" substream of `seed`; cosine compares
// profession-label embeddings (ties go to the earliest record); area picks
// the highest archived fairness within area_of(profession) and falls back
// to cosine when the profession is unmapped or its area has no record.
Selection select_cot(const DemonstrationPool& pool,
                     std::string_view profession, SelectionStrategy strategy,
                     std::uint64_t seed, TextEmbedder* embedder,
                     const ProfessionAreaMap& areas);

struct Adaptation {
  std::string cot_text;
  std::vector<std::string> prompts;  // exactly n entries
  std::vector<std::string> warnings;
  std::vector<ChatMessage> transcript;
};

// Two-turn adaptation: the archived CoT with an adaptation request, then a
// request for n prompts. Short prompt lists are padded by repeating the last
// prompt and long ones truncated, each with a warning. Unparseable replies
// throw Error(kMalformedResponse) carrying the raw text as detail.
Adaptation adapt_cot(const CoTRecord& record, std::string_view new_profession,
                     int n_prompts, Reasoner& reasoner);

}  // namespace fairprompt

#endif  // FAIRPROMPT_POOL_H_
