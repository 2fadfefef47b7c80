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

#ifndef FAIRPROMPT_ANALYSIS_H_
#define FAIRPROMPT_ANALYSIS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprompt/manifest.h"
#include "fairprompt/metrics.h"

namespace fairprompt {

// counts[gold][predicted], both indexed by `categories`.
struct ConfusionMatrix {
  std::vector<std::string> categories;
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_total(std::size_t gold) const;

  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const std::string> predicted,
                          std::span<const std::string> gold,
                          const std::vector<std::string>& categories);

// 100 * trace / total. Throws on an empty matrix.
double overall_agreement(const ConfusionMatrix& cm);

// 100 * diag / row total per class. Classes with an empty gold row are left
// out and named in `warnings`.
std::map<std::string, double> per_class_agreement(
    const ConfusionMatrix& cm, std::vector<std::string>* warnings = nullptr);
std::map<std::string, double> misclassification(
    const ConfusionMatrix& cm, std::vector<std::string>* warnings = nullptr);

// One row of a label file: image_id,attribute,category.
struct LabelRow {
  std::string image_id;
  std::string attribute;
  std::string category;

  bool operator==(const LabelRow&) const = default;
};

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view value);

// Requires the header "image_id,attribute,category".
std::vector<LabelRow> parse_label_csv(std::string_view text);
std::vector<LabelRow> read_label_csv(const std::filesystem::path& path);
std::string write_label_csv(std::span<const LabelRow> rows);

struct LabelAgreement {
  std::string attribute;
  ConfusionMatrix matrix;
  std::size_t unlabeled_predictions = 0;
};

// Joins predictions and gold labels of `attribute` by image id. A gold label
// for an image with no prediction, or a label outside `categories`, throws.
LabelAgreement agreement_from_labels(std::span<const LabelRow> predicted,
                                     std::span<const LabelRow> gold,
                                     const std::string& attribute,
                                     const std::vector<std::string>& categories);

std::string format_confusion(const ConfusionMatrix& cm);
// Agreement summary: overall plus per-class agreement and misclassification.
std::string format_agreement_report(const LabelAgreement& agreement);

// Table-shaped run summaries.
struct ReportRow {
  std::string run_id;
  std::string command;
  std::string profession;
  std::vector<AttributeEntropy> entropies;
  double clip_t = 0.0;
  double fairness_score = 0.0;

  bool operator==(const ReportRow&) const = default;
};

enum class ReportFormat { kTableText, kDelimited, kStructured };

std::string_view to_string(ReportFormat format);
ReportFormat parse_report_format(std::string_view text);
std::string_view report_extension(ReportFormat format);

// Rows for every manifest with final metrics, sorted by (profession, run id).
std::vector<ReportRow> report_rows(std::span<const Manifest> manifests);

// Entropies and CLIP-T print with 2 decimals in table text; delimited and
// structured output keep full precision.
std::string emit_report(std::span<const ReportRow> rows, ReportFormat format);
std::vector<ReportRow> parse_structured_report(std::string_view text);

}  // namespace fairprompt

#endif  // FAIRPROMPT_ANALYSIS_H_
