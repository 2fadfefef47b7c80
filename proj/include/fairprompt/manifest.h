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

#ifndef FAIRPROMPT_MANIFEST_H_
#define FAIRPROMPT_MANIFEST_H_

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/refine.h"
#include "json.hpp"

namespace fairprompt {

// Record types of a run manifest (one JSON object per line, keys sorted).
inline constexpr std::string_view kRecordHeader = "header";
inline constexpr std::string_view kRecordIteration = "iteration";
inline constexpr std::string_view kRecordCall = "call";
inline constexpr std::string_view kRecordSelection = "selection";
inline constexpr std::string_view kRecordAdaptation = "adaptation";
inline constexpr std::string_view kRecordProfile = "profile";
inline constexpr std::string_view kRecordEvaluation = "evaluation";
inline constexpr std::string_view kRecordFinal = "final";

nlohmann::json to_json(const CategoricalDistribution& dist);
CategoricalDistribution distribution_from_json(const nlohmann::json& j);
// Array of {"attribute", "categories", "counts"} in schema order.
nlohmann::json counts_to_json(const std::vector<CategoricalDistribution>& counts,
                              const AttributeSchema& schema);
std::vector<CategoricalDistribution> counts_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IterationRecord& record,
                       const AttributeSchema& schema);
IterationRecord iteration_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CallRecord& call);
nlohmann::json to_json(const AttributeProfile& profile);
nlohmann::json to_json(const ImageEvaluation& image);

// Appends records to a manifest file, flushing after each line so that a
// crashed run leaves every completed record on disk.
class ManifestWriter : public CallRecorder, public IterationSink {
 public:
  ManifestWriter(std::filesystem::path path, const AttributeSchema& schema);
  ~ManifestWriter() override;
  ManifestWriter(const ManifestWriter&) = delete;
  ManifestWriter& operator=(const ManifestWriter&) = delete;

  void write(const nlohmann::json& record);
  void record(const CallRecord& call) override;
  void on_iteration(const IterationRecord& record) override;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  AttributeSchema schema_;
  std::mutex mu_;
  std::FILE* file_ = nullptr;
};

struct Manifest {
  std::filesystem::path path;
  nlohmann::json header;
  std::vector<nlohmann::json> records;  // every line after the header
  std::optional<nlohmann::json> final;

  std::vector<nlohmann::json> of_type(std::string_view type) const;
};

Manifest read_manifest(const std::filesystem::path& path);

}  // namespace fairprompt

#endif  // FAIRPROMPT_MANIFEST_H_
