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

#include "fairprompt/pool.h"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fairprompt/templates.h"

namespace fairprompt {

using nlohmann::json;

namespace {

constexpr std::string_view kPoolKind = "fairprompt-pool";

void write_fully(int fd, const std::string& data, const std::string& where) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "write failed: " + where);
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

json to_json(const MetricSnapshot& s) {
  json ent = json::array();
  for (const auto& e : s.per_attribute_entropy) {
    ent.push_back({{"attribute", e.attribute}, {"value", e.value}});
  }
  return {{"per_attribute_entropy", std::move(ent)},
          {"clip_t", s.clip_t},
          {"fairness_score", s.fairness_score}};
}

MetricSnapshot metric_snapshot_from_json(const json& j) {
  MetricSnapshot s;
  for (const auto& e : j.at("per_attribute_entropy")) {
    s.per_attribute_entropy.push_back(
        {e.at("attribute").get<std::string>(), e.at("value").get<double>()});
  }
  s.clip_t = j.at("clip_t").get<double>();
  s.fairness_score = j.at("fairness_score").get<double>();
  return s;
}

json to_json(const CoTRecord& r) {
  return {{"format_version", kFormatVersion},
          {"id", r.id},
          {"cot_text", r.cot_text},
          {"profession", r.profession},
          {"area", r.area ? json(*r.area) : json(nullptr)},
          {"prompts", r.prompts},
          {"metrics", to_json(r.metrics)},
          {"run_id", r.run_id},
          {"iteration", r.iteration},
          {"created_at", r.created_at}};
}

CoTRecord cot_record_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported pool record version");
    }
    CoTRecord r;
    r.id = j.at("id").get<std::string>();
    r.cot_text = j.at("cot_text").get<std::string>();
    r.profession = j.at("profession").get<std::string>();
    if (!j.at("area").is_null()) r.area = j.at("area").get<std::string>();
    r.prompts = j.at("prompts").get<std::vector<std::string>>();
    r.metrics = metric_snapshot_from_json(j.at("metrics"));
    r.run_id = j.at("run_id").get<std::string>();
    r.iteration = j.at("iteration").get<int>();
    r.created_at = j.at("created_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad pool record: ") + e.what());
  }
}

// Pool -------------------------------------------------------------------------

DemonstrationPool DemonstrationPool::load(const std::filesystem::path& path) {
  DemonstrationPool pool(path);
  if (!std::filesystem::exists(path)) return pool;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read pool " + path.string());
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
    if (j.value("kind", "") == kPoolKind) continue;
    pool.records_.push_back(cot_record_from_json(j));
  }
  return pool;
}

const CoTRecord* DemonstrationPool::find(std::string_view id) const {
  for (const auto& r : records_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::string DemonstrationPool::serialize() const {
  std::string out =
      json{{"kind", kPoolKind}, {"format_version", kFormatVersion}}.dump() + "\n";
  for (const auto& r : records_) out += to_json(r).dump() + "\n";
  return out;
}

void DemonstrationPool::persist(const std::vector<CoTRecord>& records) {
  if (!path_) return;
  DemonstrationPool staged;
  staged.records_ = records;
  const std::string data = staged.serialize();

  const std::filesystem::path target = *path_;
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  const std::filesystem::path tmp = target.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot create " + tmp.string());
  try {
    write_fully(fd, data, tmp.string());
    if (::fsync(fd) != 0) throw Error(ErrorCode::kIo, "fsync failed: " + tmp.string());
  } catch (...) {
    ::close(fd);
    std::filesystem::remove(tmp);
    throw;
  }
  ::close(fd);
  if (before_rename) before_rename();
  if (::rename(tmp.c_str(), target.c_str()) != 0) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::kIo, "cannot replace " + target.string());
  }
}

const CoTRecord& DemonstrationPool::append(CoTRecord record) {
  if (find(record.id) != nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate pool id " + record.id);
  }
  std::vector<CoTRecord> next = records_;
  next.push_back(std::move(record));
  persist(next);
  records_ = std::move(next);
  return records_.back();
}

const CoTRecord& DemonstrationPool::archive(const RefinementResult& result,
                                            const std::string& run_id,
                                            const ProfessionAreaMap& areas) {
  const IterationRecord& it = result.selected_record();
  CoTRecord r;
  r.id = "cot-" + std::to_string(records_.size() + 1);
  r.cot_text = it.cot_text;
  r.profession = result.profession;
  r.area = area_of(result.profession, areas);
  r.prompts = it.prompts;
  r.metrics = it.metrics;
  r.run_id = run_id;
  r.iteration = it.index;
  r.created_at = current_timestamp();
  return append(std::move(r));
}

// Selection --------------------------------------------------------------------

std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kRandom: return "random";
    case SelectionStrategy::kCosine: return "cosine";
    case SelectionStrategy::kArea: return "area";
  }
  return "area";
}

SelectionStrategy parse_selection_strategy(std::string_view text) {
  for (auto s : {SelectionStrategy::kRandom, SelectionStrategy::kCosine,
                 SelectionStrategy::kArea}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown strategy '" + std::string(text) +
                  "' (expected area, cosine or random)",
              "strategy");
}

namespace {

std::size_t nearest_by_cosine(const DemonstrationPool& pool,
                              std::string_view profession,
                              TextEmbedder* embedder) {
  if (embedder == nullptr) {
    throw Error(ErrorCode::kCapability,
                "cosine selection needs a text embedder port");
  }
  std::vector<std::string> texts{std::string(profession)};
  for (const auto& r : pool.records()) texts.push_back(r.profession);
  const auto vs = embedder->embed(texts);
  std::size_t best = 0;
  double best_score = cosine(vs[0], vs[1]);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double s = cosine(vs[0], vs[i + 1]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

Selection select_cot(const DemonstrationPool& pool, std::string_view profession,
                     SelectionStrategy strategy, std::uint64_t seed,
                     TextEmbedder* embedder, const ProfessionAreaMap& areas) {
  if (pool.empty()) {
    throw Error(ErrorCode::kNotFound, "demonstration pool is empty");
  }
  Selection sel;
  sel.used = strategy;
  switch (strategy) {
    case SelectionStrategy::kRandom: {
      std::mt19937_64 rng(substream_seed(seed, "selection"));
      sel.index = static_cast<std::size_t>(
          uniform01(rng) * static_cast<double>(pool.size()));
      return sel;
    }
    case SelectionStrategy::kCosine:
      sel.index = nearest_by_cosine(pool, profession, embedder);
      return sel;
    case SelectionStrategy::kArea: {
      const auto area = area_of(profession, areas);
      std::optional<std::size_t> best;
      if (area) {
        const auto& records = pool.records();
        for (std::size_t i = 0; i < records.size(); ++i) {
          if (records[i].area != area) continue;
          if (!best || records[i].metrics.fairness_score >
                           records[*best].metrics.fairness_score) {
            best = i;
          }
        }
      }
      if (best) {
        sel.index = *best;
        return sel;
      }
      sel.used = SelectionStrategy::kCosine;
      sel.note = area ? "no archived CoT in area '" + *area + "'; used cosine"
                      : "profession '" + std::string(profession) +
                            "' has no area; used cosine";
      sel.index = nearest_by_cosine(pool, profession, embedder);
      return sel;
    }
  }
  return sel;
}

// Adaptation -------------------------------------------------------------------

Adaptation adapt_cot(const CoTRecord& record, std::string_view new_profession,
                     int n_prompts, Reasoner& reasoner) {
  if (n_prompts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_prompts must be positive",
                "n_prompts");
  }
  Adaptation out;
  out.transcript.push_back(
      {"user", adaptation_request(record.profession, record.cot_text,
                                  new_profession)});
  const std::string cot_reply = reasoner.chat(out.transcript);
  out.cot_text = trim(cot_reply);
  if (out.cot_text.empty()) {
    throw Error(ErrorCode::kMalformedResponse,
                "reasoner returned an empty adapted chain of thought", "",
                cot_reply);
  }
  out.transcript.push_back({"assistant", out.cot_text});
  out.transcript.push_back({"user", prompt_list_request(n_prompts)});
  const std::string list_reply = reasoner.chat(out.transcript);
  out.transcript.push_back({"assistant", list_reply});

  out.prompts = parse_numbered_list(list_reply);
  if (out.prompts.empty()) {
    throw Error(ErrorCode::kMalformedResponse,
                "reasoner reply contains no numbered prompt list", "",
                list_reply);
  }
  const auto n = static_cast<std::size_t>(n_prompts);
  if (out.prompts.size() < n) {
    out.warnings.push_back("reasoner returned " +
                           std::to_string(out.prompts.size()) + " of " +
                           std::to_string(n) +
                           " prompts; padded by repeating the last prompt");
    out.prompts.resize(n, out.prompts.back());
  } else if (out.prompts.size() > n) {
    out.warnings.push_back("reasoner returned " +
                           std::to_string(out.prompts.size()) + " prompts; kept the first " +
                           std::to_string(n));
    out.prompts.resize(n);
  }
  return out;
}

}  // namespace fairprompt
