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

#include <unistd.h>

#include <filesystem>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "fairprompt/common.h"
#include "fairprompt/manifest.h"
#include "fairprompt/pool.h"

namespace fairprompt {
namespace {

namespace fs = std::filesystem;
using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::SizeIs;

const fs::path kFixtures = fs::path(FAIRPROMPT_SOURCE_DIR) / "tests" /
                           "fixtures" / "religion_agreement";
const std::vector<std::string> kReligions = {"Christianity", "Hinduism",
                                             "Islam", "Neutral"};

LabelAgreement fixture_agreement(const std::string& predictions) {
  return agreement_from_labels(read_label_csv(kFixtures / predictions),
                               read_label_csv(kFixtures / "gold.csv"),
                               "religion", kReligions);
}

TEST(ReligionAgreementTest, OursMatrix) {
  const LabelAgreement a = fixture_agreement("pred_ours.csv");
  EXPECT_EQ(a.matrix.total(), 484);
  EXPECT_EQ(a.matrix.counts[2], (std::vector<std::int64_t>{1, 0, 57, 2}));
  // Headline agreement of the attire-based predictor.
  EXPECT_NEAR(overall_agreement(a.matrix), 75.00, 0.01);
  const auto per_class = per_class_agreement(a.matrix);
  EXPECT_NEAR(per_class.at("Islam"), 95.00, 0.01);
  // Derived from the matrix; the reference per-class figures repeat the
  // overall figure for these rows.
  EXPECT_NEAR(per_class.at("Christianity"), 100.0 * 26 / 42, 1e-9);
  EXPECT_NEAR(per_class.at("Hinduism"), 100.0 * 50 / 91, 1e-9);
  EXPECT_NEAR(per_class.at("Neutral"), 100.0 * 230 / 291, 1e-9);
  EXPECT_NEAR(misclassification(a.matrix).at("Neutral"), 20.96, 0.01);
}

TEST(ReligionAgreementTest, VanillaMatrix) {
  const LabelAgreement a = fixture_agreement("pred_vanilla.csv");
  EXPECT_EQ(a.matrix.total(), 484);
  const auto per_class = per_class_agreement(a.matrix);
  EXPECT_NEAR(per_class.at("Islam"), 100.00, 0.01);
  EXPECT_NEAR(misclassification(a.matrix).at("Neutral"), 74.57, 0.01);
  // The matrix gives 231/484 = 47.73; the reference overall figure of 41.12
  // does not follow from it.
  // The matrix is taken as authoritative.
  EXPECT_NEAR(overall_agreement(a.matrix), 100.0 * 231 / 484, 1e-9);
  EXPECT_NEAR(overall_agreement(a.matrix), 47.73, 0.01);
  EXPECT_GT(std::abs(overall_agreement(a.matrix) - 41.12), 6.0);
}

TEST(ReligionAgreementTest, ReportText) {
  const std::string report = format_agreement_report(fixture_agreement("pred_ours.csv"));
  EXPECT_THAT(report, HasSubstr("overall_agreement: 75.00"));
  EXPECT_THAT(report, HasSubstr("samples: 484"));
}

TEST(ConfusionTest, HandCountedSmallCase) {
  const std::vector<std::string> cats = {"a", "b"};
  const std::vector<std::string> pred = {"a", "b", "b", "a"};
  const std::vector<std::string> gold = {"a", "a", "b", "b"};
  const ConfusionMatrix cm = confusion(pred, gold, cats);
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::int64_t>>{{1, 1}, {1, 1}}));
  EXPECT_DOUBLE_EQ(overall_agreement(cm), 50.0);
  EXPECT_THROW(confusion(pred, std::vector<std::string>{"a"}, cats), Error);
  EXPECT_THROW(confusion(std::vector<std::string>{"z"},
                         std::vector<std::string>{"a"}, cats),
               Error);
}

TEST(ConfusionTest, EmptyGoldRowIsWarnedNotDivided) {
  const std::vector<std::string> cats = {"a", "b", "c"};
  const std::vector<std::string> pred = {"a", "c"};
  const std::vector<std::string> gold = {"a", "a"};
  const ConfusionMatrix cm = confusion(pred, gold, cats);
  std::vector<std::string> warnings;
  const auto per_class = per_class_agreement(cm, &warnings);
  EXPECT_THAT(per_class, SizeIs(1));
  EXPECT_DOUBLE_EQ(per_class.at("a"), 50.0);
  EXPECT_THAT(warnings, SizeIs(2));
  EXPECT_THROW(overall_agreement(ConfusionMatrix{cats, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}),
               Error);
}

TEST(LabelsTest, GoldWithoutPredictionThrows) {
  const std::vector<LabelRow> gold = {{"x", "religion", "Islam"}};
  const std::vector<LabelRow> pred = {{"y", "religion", "Islam"}};
  EXPECT_THROW(agreement_from_labels(pred, gold, "religion", kReligions), Error);
}

TEST(LabelsTest, UnlabeledPredictionsAreCounted) {
  const std::vector<LabelRow> gold = {{"x", "religion", "Islam"}};
  const std::vector<LabelRow> pred = {{"x", "religion", "Islam"},
                                      {"y", "religion", "Neutral"},
                                      {"x", "gender", "male"}};
  const LabelAgreement a = agreement_from_labels(pred, gold, "religion", kReligions);
  EXPECT_EQ(a.matrix.total(), 1);
  EXPECT_EQ(a.unlabeled_predictions, 1u);
}

TEST(CsvTest, QuotingRoundTrip) {
  const std::vector<LabelRow> rows = {{"img,1", "religion", "Islam"},
                                      {"img\"2", "gender", "fe\nmale"}};
  const std::string text = write_label_csv(rows);
  EXPECT_EQ(parse_label_csv(text), rows);
  EXPECT_THAT(parse_csv("a,\"b,c\"\r\n\"d\"\"e\",f\n"),
              ElementsAre(ElementsAre("a", "b,c"), ElementsAre("d\"e", "f")));
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}

TEST(CsvTest, LabelFileValidation) {
  EXPECT_THROW(parse_label_csv("id,attr,cat\n"), Error);
  EXPECT_THROW(parse_label_csv("image_id,attribute,category\nx,religion\n"),
               Error);
  EXPECT_THROW(parse_label_csv("image_id,attribute,category\n"
                               "x,religion,Islam\nx,religion,Neutral\n"),
               Error);
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("fairprompt-analysis-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path write_manifest(const fs::path& dir, const std::string& run_id,
                        const std::string& profession, double gender,
                        double clip) {
  const fs::path path = dir / (run_id + ".jsonl");
  ManifestWriter w(path, AttributeSchema::defaults());
  w.write({{"type", "header"},
           {"run_id", run_id},
           {"command", "cot-gen"},
           {"profession", profession}});
  w.record(CallRecord{"/chat", "d", 1.5, 0, 200, true});
  const MetricSnapshot s{{{"gender", gender}, {"race", 1.0 / 3.0}}, clip,
                         (gender + 1.0 / 3.0) / 2};
  w.write({{"type", "final"}, {"status", "ok"}, {"metrics", to_json(s)}});
  return path;
}

TEST(ManifestTest, WriterAndReaderAgree) {
  TempDir dir;
  const fs::path p = write_manifest(dir.path(), "run-b", "Nurse", 0.5, 0.27);
  const Manifest m = read_manifest(p);
  EXPECT_EQ(m.header.at("run_id"), "run-b");
  ASSERT_TRUE(m.final.has_value());
  EXPECT_EQ(m.final->at("status"), "ok");
  EXPECT_THAT(m.of_type("call"), SizeIs(1));
  // Keys are written sorted.
  const std::string text = read_text_file(p);
  EXPECT_THAT(text, HasSubstr("{\"command\":\"cot-gen\",\"profession\""));
}

TEST(ManifestTest, MissingHeaderIsParseError) {
  TempDir dir;
  const fs::path p = dir.path() / "bad.jsonl";
  {
    ManifestWriter w(p, AttributeSchema::defaults());
    w.write({{"type", "final"}});
  }
  EXPECT_THROW(read_manifest(p), Error);
}

TEST(ManifestTest, IterationRoundTrip) {
  const AttributeSchema schema = AttributeSchema::defaults();
  IterationRecord r;
  r.index = 2;
  r.cot_text = "cot";
  r.prompts = {"p"};
  r.images = {{"abc", "json"}};
  for (const auto& a : schema.attributes) {
    auto d = CategoricalDistribution::zeros(a.categories);
    d.counts[0] = 3;
    r.counts.push_back(d);
  }
  r.metrics = {{{"gender", 0.25}}, 0.3, 0.25};
  r.decision = Decision::kStoppedAlignment;
  r.note = "n";
  EXPECT_EQ(iteration_from_json(to_json(r, schema)), r);
}

TEST(ReportTest, SortedDeterministicAndRoundTrips) {
  TempDir dir;
  std::vector<Manifest> manifests = {
      read_manifest(write_manifest(dir.path(), "run-z", "Teacher", 0.9, 0.26)),
      read_manifest(write_manifest(dir.path(), "run-b", "Nurse", 0.123456789, 0.27)),
      read_manifest(write_manifest(dir.path(), "run-a", "Nurse", 0.5, 0.28)),
  };
  const auto rows = report_rows(manifests);
  ASSERT_THAT(rows, SizeIs(3));
  EXPECT_EQ(rows[0].run_id, "run-a");
  EXPECT_EQ(rows[1].run_id, "run-b");
  EXPECT_EQ(rows[2].profession, "Teacher");

  std::reverse(manifests.begin(), manifests.end());
  for (auto f : {ReportFormat::kTableText, ReportFormat::kDelimited,
                 ReportFormat::kStructured}) {
    EXPECT_EQ(emit_report(report_rows(manifests), f), emit_report(rows, f));
  }
  EXPECT_EQ(parse_structured_report(emit_report(rows, ReportFormat::kStructured)),
            rows);

  const std::string table = emit_report(rows, ReportFormat::kTableText);
  EXPECT_THAT(table, HasSubstr("0.12"));
  EXPECT_THAT(table, ::testing::Not(HasSubstr("0.123")));
  const std::string csv = emit_report(rows, ReportFormat::kDelimited);
  EXPECT_THAT(csv, HasSubstr("0.123456789"));
  EXPECT_THAT(parse_csv(csv), SizeIs(4));
}

TEST(ReportTest, FormatNames) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::kDelimited);
  EXPECT_EQ(report_extension(ReportFormat::kStructured), "jsonl");
  EXPECT_THROW(parse_report_format("xml"), Error);
}

}  // namespace
}  // namespace fairprompt
