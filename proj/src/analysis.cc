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

#include "fairprompt/analysis.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "fairprompt/pool.h"

namespace fairprompt {

using nlohmann::json;

// Confusion -----------------------------------------------------------------------

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::int64_t ConfusionMatrix::row_total(std::size_t gold) const {
  std::int64_t t = 0;
  for (auto c : counts.at(gold)) t += c;
  return t;
}

ConfusionMatrix confusion(std::span<const std::string> predicted,
                          std::span<const std::string> gold,
                          const std::vector<std::string>& categories) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction and gold lists differ in length (" +
                    std::to_string(predicted.size()) + " vs " +
                    std::to_string(gold.size()) + ")");
  }
  auto index = [&](const std::string& label) {
    auto it = std::find(categories.begin(), categories.end(), label);
    if (it == categories.end()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown label '" + label + "'");
    }
    return static_cast<std::size_t>(it - categories.begin());
  };
  ConfusionMatrix cm;
  cm.categories = categories;
  cm.counts.assign(categories.size(),
                   std::vector<std::int64_t>(categories.size(), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++cm.counts[index(gold[i])][index(predicted[i])];
  }
  return cm;
}

double overall_agreement(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) {
    throw Error(ErrorCode::kInvalidArgument, "agreement of an empty matrix");
  }
  return 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::map<std::string, double> per_class_agreement(
    const ConfusionMatrix& cm, std::vector<std::string>* warnings) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < cm.categories.size(); ++i) {
    const auto row = cm.row_total(i);
    if (row == 0) {
      if (warnings) {
        warnings->push_back("class '" + cm.categories[i] +
                            "' has no gold samples; agreement undefined");
      }
      continue;
    }
    out[cm.categories[i]] =
        100.0 * static_cast<double>(cm.counts[i][i]) / static_cast<double>(row);
  }
  return out;
}

std::map<std::string, double> misclassification(
    const ConfusionMatrix& cm, std::vector<std::string>* warnings) {
  auto out = per_class_agreement(cm, warnings);
  for (auto& [_, v] : out) v = 100.0 - v;
  return out;
}

// CSV --------------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParse, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<LabelRow> parse_label_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() ||
      rows[0] != std::vector<std::string>{"image_id", "attribute", "category"}) {
    throw Error(ErrorCode::kParse,
                "label file must start with the header image_id,attribute,category");
  }
  std::vector<LabelRow> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) {
      throw Error(ErrorCode::kParse, "label row " + std::to_string(i + 1) +
                                         " does not have 3 fields");
    }
    LabelRow r{trim(rows[i][0]), trim(rows[i][1]), trim(rows[i][2])};
    if (!seen.emplace(r.image_id, r.attribute).second) {
      throw Error(ErrorCode::kParse, "duplicate label for image '" + r.image_id +
                                         "' attribute '" + r.attribute + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabelRow> read_label_csv(const std::filesystem::path& path) {
  try {
    return parse_label_csv(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string write_label_csv(std::span<const LabelRow> rows) {
  std::string out = "image_id,attribute,category\n";
  for (const auto& r : rows) {
    out += csv_field(r.image_id) + "," + csv_field(r.attribute) + "," +
           csv_field(r.category) + "\n";
  }
  return out;
}

LabelAgreement agreement_from_labels(std::span<const LabelRow> predicted,
                                     std::span<const LabelRow> gold,
                                     const std::string& attribute,
                                     const std::vector<std::string>& categories) {
  std::map<std::string, std::string> pred_by_id;
  for (const auto& p : predicted) {
    if (p.attribute == attribute) pred_by_id[p.image_id] = p.category;
  }
  std::vector<std::string> pred_labels;
  std::vector<std::string> gold_labels;
  std::set<std::string> labeled;
  for (const auto& g : gold) {
    if (g.attribute != attribute) continue;
    auto it = pred_by_id.find(g.image_id);
    if (it == pred_by_id.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "gold label for unknown image id '" + g.image_id + "'");
    }
    gold_labels.push_back(g.category);
    pred_labels.push_back(it->second);
    labeled.insert(g.image_id);
  }
  LabelAgreement out;
  out.attribute = attribute;
  out.matrix = confusion(pred_labels, gold_labels, categories);
  out.unlabeled_predictions = pred_by_id.size() - labeled.size();
  return out;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_confusion(const ConfusionMatrix& cm) {
  std::size_t width = 8;
  for (const auto& c : cm.categories) width = std::max(width, c.size() + 2);
  std::string out = pad("gold\\pred", width);
  for (const auto& c : cm.categories) out += pad(c, width);
  out += "\n";
  for (std::size_t i = 0; i < cm.categories.size(); ++i) {
    out += pad(cm.categories[i], width);
    for (auto v : cm.counts[i]) out += pad(std::to_string(v), width);
    out += "\n";
  }
  return out;
}

std::string format_agreement_report(const LabelAgreement& a) {
  std::vector<std::string> warnings;
  const auto agree = per_class_agreement(a.matrix, &warnings);
  std::string out = "attribute: " + a.attribute + "\n";
  out += "samples: " + std::to_string(a.matrix.total()) + "\n";
  out += "overall_agreement: " + fixed(overall_agreement(a.matrix), 2) + "\n";
  out += "\n" + format_confusion(a.matrix) + "\n";
  out += "class               agreement  misclassification\n";
  for (const auto& c : a.matrix.categories) {
    auto it = agree.find(c);
    out += pad(c, 20);
    if (it == agree.end()) {
      out += "n/a        n/a\n";
    } else {
      out += pad(fixed(it->second, 2), 11) + fixed(100.0 - it->second, 2) + "\n";
    }
  }
  for (const auto& w : warnings) out += "warning: " + w + "\n";
  if (a.unlabeled_predictions > 0) {
    out += "note: " + std::to_string(a.unlabeled_predictions) +
           " predictions have no gold label\n";
  }
  return out;
}

// Reports ----------------------------------------------------------------------

std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::kTableText: return "table";
    case ReportFormat::kDelimited: return "csv";
    case ReportFormat::kStructured: return "jsonl";
  }
  return "table";
}

ReportFormat parse_report_format(std::string_view text) {
  for (auto f : {ReportFormat::kTableText, ReportFormat::kDelimited,
                 ReportFormat::kStructured}) {
    if (to_string(f) == text) return f;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown report format '" + std::string(text) +
                  "' (expected table, csv or jsonl)",
              "format");
}

std::string_view report_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::kTableText: return "txt";
    case ReportFormat::kDelimited: return "csv";
    case ReportFormat::kStructured: return "jsonl";
  }
  return "txt";
}

std::vector<ReportRow> report_rows(std::span<const Manifest> manifests) {
  std::vector<ReportRow> rows;
  for (const auto& m : manifests) {
    if (!m.final || !m.final->contains("metrics") || m.final->at("metrics").is_null()) {
      continue;
    }
    ReportRow r;
    r.run_id = m.header.value("run_id", "");
    r.command = m.header.value("command", "");
    r.profession = m.header.value("profession", "");
    const MetricSnapshot s = metric_snapshot_from_json(m.final->at("metrics"));
    r.entropies = s.per_attribute_entropy;
    r.clip_t = s.clip_t;
    r.fairness_score = s.fairness_score;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.profession, a.run_id) < std::tie(b.profession, b.run_id);
  });
  return rows;
}

namespace {

std::vector<std::string> attribute_columns(std::span<const ReportRow> rows) {
  std::vector<std::string> cols;
  for (const auto& r : rows) {
    for (const auto& e : r.entropies) {
      if (std::find(cols.begin(), cols.end(), e.attribute) == cols.end()) {
        cols.push_back(e.attribute);
      }
    }
  }
  return cols;
}

const AttributeEntropy* find_entropy(const ReportRow& r, const std::string& a) {
  for (const auto& e : r.entropies) {
    if (e.attribute == a) return &e;
  }
  return nullptr;
}

}  // namespace

std::string emit_report(std::span<const ReportRow> rows, ReportFormat format) {
  const auto cols = attribute_columns(rows);
  std::string out;
  switch (format) {
    case ReportFormat::kTableText: {
      std::size_t id_w = 8;
      std::size_t prof_w = 12;
      for (const auto& r : rows) {
        id_w = std::max(id_w, r.run_id.size() + 2);
        prof_w = std::max(prof_w, r.profession.size() + 2);
      }
      out += pad("run_id", id_w) + pad("profession", prof_w);
      for (const auto& c : cols) out += pad(c, 10);
      out += "CLIP-T\n";
      for (const auto& r : rows) {
        out += pad(r.run_id, id_w) + pad(r.profession, prof_w);
        for (const auto& c : cols) {
          const auto* e = find_entropy(r, c);
          out += pad(e ? fixed(e->value, 2) : "-", 10);
        }
        out += fixed(r.clip_t, 2) + "\n";
      }
      break;
    }
    case ReportFormat::kDelimited: {
      out += "run_id,command,profession";
      for (const auto& c : cols) out += "," + csv_field(c);
      out += ",clip_t,fairness_score\n";
      for (const auto& r : rows) {
        out += csv_field(r.run_id) + "," + csv_field(r.command) + "," +
               csv_field(r.profession);
        for (const auto& c : cols) {
          const auto* e = find_entropy(r, c);
          out += "," + (e ? exact(e->value) : std::string());
        }
        out += "," + exact(r.clip_t) + "," + exact(r.fairness_score) + "\n";
      }
      break;
    }
    case ReportFormat::kStructured: {
      for (const auto& r : rows) {
        json ent = json::array();
        for (const auto& e : r.entropies) {
          ent.push_back({{"attribute", e.attribute}, {"value", e.value}});
        }
        out += json{{"run_id", r.run_id},
                    {"command", r.command},
                    {"profession", r.profession},
                    {"per_attribute_entropy", std::move(ent)},
                    {"clip_t", r.clip_t},
                    {"fairness_score", r.fairness_score}}
                   .dump() +
               "\n";
      }
      break;
    }
  }
  return out;
}

std::vector<ReportRow> parse_structured_report(std::string_view text) {
  std::vector<ReportRow> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ReportRow r;
      r.run_id = j.at("run_id").get<std::string>();
      r.command = j.at("command").get<std::string>();
      r.profession = j.at("profession").get<std::string>();
      for (const auto& e : j.at("per_attribute_entropy")) {
        r.entropies.push_back(
            {e.at("attribute").get<std::string>(), e.at("value").get<double>()});
      }
      r.clip_t = j.at("clip_t").get<double>();
      r.fairness_score = j.at("fairness_score").get<double>();
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("bad report record: ") + e.what());
    }
  }
  return rows;
}

}  // namespace fairprompt
