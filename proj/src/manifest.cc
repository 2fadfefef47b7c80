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

#include "fairprompt/manifest.h"

#include <fstream>

#include "fairprompt/pool.h"

namespace fairprompt {

using nlohmann::json;

json to_json(const CategoricalDistribution& d) {
  return {{"categories", d.categories}, {"counts", d.counts}};
}

CategoricalDistribution distribution_from_json(const json& j) {
  CategoricalDistribution d;
  d.categories = j.at("categories").get<std::vector<std::string>>();
  d.counts = j.at("counts").get<std::vector<std::int64_t>>();
  if (d.categories.size() != d.counts.size()) {
    throw Error(ErrorCode::kParse, "categories and counts differ in length");
  }
  return d;
}

json counts_to_json(const std::vector<CategoricalDistribution>& counts,
                    const AttributeSchema& schema) {
  json out = json::array();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    json d = to_json(counts[i]);
    d["attribute"] = schema.attributes.at(i).name;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CategoricalDistribution> counts_from_json(const json& j) {
  std::vector<CategoricalDistribution> out;
  for (const auto& d : j) out.push_back(distribution_from_json(d));
  return out;
}

json to_json(const IterationRecord& r, const AttributeSchema& schema) {
  json images = json::array();
  for (const auto& ref : r.images) images.push_back(ref.file_name());
  return {{"type", kRecordIteration},
          {"index", r.index},
          {"cot_text", r.cot_text},
          {"prompts", r.prompts},
          {"images", std::move(images)},
          {"counts", counts_to_json(r.counts, schema)},
          {"metrics", to_json(r.metrics)},
          {"decision", to_string(r.decision)},
          {"note", r.note}};
}

namespace {

ImageRef ref_from_file_name(const std::string& name) {
  const auto dot = name.rfind('.');
  if (dot == std::string::npos) return {name, ""};
  return {name.substr(0, dot), name.substr(dot + 1)};
}

}  // namespace

IterationRecord iteration_from_json(const json& j) {
  try {
    IterationRecord r;
    r.index = j.at("index").get<int>();
    r.cot_text = j.at("cot_text").get<std::string>();
    r.prompts = j.at("prompts").get<std::vector<std::string>>();
    for (const auto& name : j.at("images")) {
      r.images.push_back(ref_from_file_name(name.get<std::string>()));
    }
    r.counts = counts_from_json(j.at("counts"));
    r.metrics = metric_snapshot_from_json(j.at("metrics"));
    r.decision = parse_decision(j.at("decision").get<std::string>());
    r.note = j.at("note").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad iteration record: ") + e.what());
  }
}

json to_json(const CallRecord& c) {
  return {{"type", kRecordCall},
          {"endpoint", c.endpoint},
          {"request_digest", c.request_digest},
          {"latency_ms", c.latency_ms},
          {"retries", c.retries},
          {"http_status", c.http_status},
          {"ok", c.ok}};
}

json to_json(const AttributeProfile& p) {
  json calls = json::array();
  for (const auto& c : p.calls) {
    calls.push_back(
        {{"attribute", c.attribute}, {"category", c.category}, {"score", c.score}});
  }
  return {{"calls", std::move(calls)},
          {"face_index",
           p.source.face_index ? json(*p.source.face_index) : json(nullptr)}};
}

json to_json(const ImageEvaluation& img) {
  json faces = json::array();
  for (const auto& f : img.faces) {
    faces.push_back({{"box", {f.box.x, f.box.y, f.box.w, f.box.h}},
                     {"expanded",
                      {f.expanded.x, f.expanded.y, f.expanded.w, f.expanded.h}}});
  }
  json profiles = json::array();
  for (const auto& p : img.profiles) profiles.push_back(to_json(p));
  return {{"type", kRecordProfile},
          {"image", img.image.file_name()},
          {"prompt", img.prompt},
          {"clip_t", img.clip_t ? json(*img.clip_t) : json(nullptr)},
          {"faces", std::move(faces)},
          {"profiles", std::move(profiles)}};
}

// Writer -----------------------------------------------------------------------

ManifestWriter::ManifestWriter(std::filesystem::path path,
                               const AttributeSchema& schema)
    : path_(std::move(path)), schema_(schema) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "wb");
  if (file_ == nullptr) {
    throw Error(ErrorCode::kIo, "cannot create manifest " + path_.string());
  }
}

ManifestWriter::~ManifestWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void ManifestWriter::write(const json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fflush(file_) != 0) {
    throw Error(ErrorCode::kIo, "cannot write manifest " + path_.string());
  }
}

void ManifestWriter::record(const CallRecord& call) { write(to_json(call)); }

void ManifestWriter::on_iteration(const IterationRecord& record) {
  write(to_json(record, schema_));
}

// Reader -----------------------------------------------------------------------

std::vector<json> Manifest::of_type(std::string_view type) const {
  std::vector<json> out;
  for (const auto& r : records) {
    if (r.value("type", "") == type) out.push_back(r);
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifest " + path.string());
  Manifest m;
  m.path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (lineno == 1) {
      if (type != kRecordHeader) {
        throw Error(ErrorCode::kParse, path.string() + ": first record is not a header");
      }
      m.header = std::move(j);
      continue;
    }
    if (type == kRecordFinal) m.final = j;
    m.records.push_back(std::move(j));
  }
  if (m.header.is_null()) {
    throw Error(ErrorCode::kParse, path.string() + ": empty manifest");
  }
  return m;
}

}  // namespace fairprompt
