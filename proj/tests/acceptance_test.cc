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

// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fairprompt/analysis.h"
#include "fairprompt/cli.h"
#include "fairprompt/common.h"
#include "fairprompt/manifest.h"
#include "fairprompt/metrics.h"
#include "fairprompt/multiface.h"
#include "fairprompt/pool.h"
#include "fairprompt/predictor.h"
#include "fairprompt/refine.h"
#include "fairprompt/sim_backend.h"

namespace fairprompt {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kSource(FAIRPROMPT_SOURCE_DIR);

// Collects failure messages for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::abs(got - want) <= tol, s.str());
  }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct Criterion {
  std::string name;
  std::function<void(Check&)> body;
};

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("fairprompt-acceptance-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json load_json(const fs::path& p) { return json::parse(read_text_file(p)); }

void metrics_golden(Check& c) {
  c.expect(normalized_entropy(std::vector<std::int64_t>{5, 5, 5, 5}) == 1.0,
           "uniform entropy is exactly 1");
  c.expect(normalized_entropy(std::vector<std::int64_t>{20, 0}) == 0.0,
           "degenerate entropy is exactly 0");
  c.near(normalized_entropy(std::vector<std::int64_t>{18, 2}), 0.468996, 1e-6,
         "H'(18:2)");
  const json oracle = load_json(kSource / "tests" / "oracles" / "entropy_values.json");
  bool found = false;
  for (const auto& k : oracle.at("cases")) {
    const auto counts = k.at("counts").get<std::vector<std::int64_t>>();
    const double want = std::stod(k.at("value").get<std::string>());
    c.near(normalized_entropy(counts), want, 1e-12, "oracle case");
    found = found || counts == std::vector<std::int64_t>{18, 2};
  }
  c.expect(found, "oracle file contains the 18:2 case");
}

LabelAgreement agreement_for(const std::string& predictions) {
  const fs::path dir = kSource / "tests" / "fixtures" / "religion_agreement";
  return agreement_from_labels(read_label_csv(dir / predictions),
                               read_label_csv(dir / "gold.csv"), "religion",
                               {"Christianity", "Hinduism", "Islam", "Neutral"});
}

void religion_agreement(Check& c) {
  const LabelAgreement ours = agreement_for("pred_ours.csv");
  const LabelAgreement vanilla = agreement_for("pred_vanilla.csv");
  c.near(overall_agreement(ours.matrix), 75.00, 0.01, "ours overall");
  c.near(per_class_agreement(ours.matrix).at("Islam"), 95.00, 0.01, "ours Islam");
  c.near(per_class_agreement(vanilla.matrix).at("Islam"), 100.00, 0.01,
         "vanilla Islam");
  c.near(misclassification(vanilla.matrix).at("Neutral"), 74.57, 0.01,
         "vanilla Neutral misclassification");
  // Derived from the matrix; the reference figure of 41.12 does not follow from it.
  c.near(overall_agreement(vanilla.matrix), 47.73, 0.01, "vanilla overall (derived)");
}

void end_to_end(Check& c) {
  const fs::path root = scratch_dir("e2e");
  const std::vector<std::string> argv = {
      "fairprompt", "cot-gen", "--profession", "Nurse", "--seed", "7",
      "--images", "1000", "--out", (root / "runs").string(),
      "--timestamp", "2026-01-01T00:00:00Z"};
  std::ostringstream out, err;
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_cli(argv, out, err);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(rc == kExitOk, "cot-gen exit " + std::to_string(rc) + ": " + err.str());
  if (rc != kExitOk) return;
  std::cout << "  runtime " << seconds << " s\n";
  c.expect(seconds < 10.0, "runtime " + std::to_string(seconds) + " s");

  fs::path manifest_path;
  for (const auto& e : fs::directory_iterator(root / "runs")) {
    if (e.is_directory()) manifest_path = e.path() / "manifest.jsonl";
  }
  const Manifest m = read_manifest(manifest_path);
  std::vector<IterationRecord> its;
  for (const auto& r : m.of_type(kRecordIteration)) its.push_back(iteration_from_json(r));
  c.expect(!its.empty() && m.final.has_value(), "manifest has iterations and a final record");
  if (its.empty() || !m.final) return;

  const double h0 = its.front().metrics.entropy("gender");
  std::cout << "  t0 gender H' " << h0 << ", iterations " << its.size() - 1 << "\n";
  c.near(h0, 0.469, 0.05, "t0 gender H'");
  c.expect(its.back().index <= 8, "terminated after " + std::to_string(its.back().index) +
                                      " refinement iterations");
  c.expect(its.back().decision != Decision::kRefined, "run ended on a stop decision");
  const MetricSnapshot baseline = metric_snapshot_from_json(m.final->at("baseline"));
  const MetricSnapshot selected = metric_snapshot_from_json(m.final->at("metrics"));
  const double tau = m.header.at("config").at("tau").get<double>();
  c.expect(selected.fairness_score >= 0.95,
           "selected fairness " + std::to_string(selected.fairness_score));
  c.expect(selected.clip_t >= tau * baseline.clip_t,
           "selected CLIP-T " + std::to_string(selected.clip_t) + " below tau * baseline");

  std::ostringstream rout, rerr;
  const int replay = run_cli({"fairprompt", "replay", "--manifest", manifest_path.string()},
                             rout, rerr);
  c.expect(replay == kExitOk, "replay exit " + std::to_string(replay) + ": " + rerr.str());
  fs::remove_all(root);
}

Embedding random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return Embedding::normalized(std::move(v));
}

// Flattened argmax over (category, prompt) pairs; the first maximum wins.
std::string oracle_argmax(const Embedding& image,
                          const std::vector<std::string>& categories,
                          const std::map<std::string, std::vector<std::string>>& prompts,
                          const PromptEmbeddingMap& map) {
  std::string best;
  double best_score = -2.0;
  for (const auto& cat : categories) {
    for (const auto& p : prompts.at(cat)) {
      const auto& e = map.at(p).values();
      double d = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < e.size(); ++i) {
        d += image.values()[i] * e[i];
        na += image.values()[i] * image.values()[i];
        nb += e[i] * e[i];
      }
      const double s = d / std::sqrt(na * nb);
      if (s > best_score) {
        best_score = s;
        best = cat;
      }
    }
  }
  return best;
}

void predictor_oracle(Check& c) {
  const AttributeSchema schema = AttributeSchema::defaults();
  std::mt19937_64 rng(1);
  PromptEmbeddingMap map;
  for (const auto& t : schema_prompt_texts(schema)) map.emplace(t, random_unit(rng, 32));
  const PromptBank bank = PromptBank::build(schema, map);
  std::mt19937_64 images(2024);
  int mismatches = 0;
  int cases = 0;
  for (int n = 0; n < 1000; ++n) {
    const Embedding image = random_unit(images, 32);
    for (const auto& a : schema.attributes) {
      const auto got = classify_zero_shot(image, a, map).category;
      mismatches += got != oracle_argmax(image, a.categories, a.prompts, map);
      ++cases;
    }
    const auto rel = predict_religion(image, bank.attire()).category;
    mismatches += rel != oracle_argmax(image, schema.religion().categories,
                                       schema.religion_attire, map);
    ++cases;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " of " +
                                std::to_string(cases) + " disagree with the oracle");

  // Tie-breaks: identical prompt embeddings resolve to the earlier category.
  const Embedding e = Embedding::normalized({1.0, 0.0});
  CategoryPrompts tied{"t", {"a", "b"}, {{e}, {e}}};
  c.expect(classify_zero_shot(e, tied).category == "a", "tie goes to first category");
  CategoryPrompts attire{"religion", {"x", "y"}, {{Embedding::normalized({0.0, 1.0}), e}, {e}}};
  c.expect(predict_religion(e, attire).category == "x",
           "attire tie goes to first religion");
}

void multiface_conservation(Check& c) {
  const AttributeSchema schema = AttributeSchema::defaults();
  BiasProfile profile = BiasProfile::defaults(schema);
  profile.faces_per_image = 3;
  profile.seed = 11;
  BackendSet b = make_sim_backends(schema, profile, nullptr);
  const PromptBank bank = PromptBank::embed(schema, *b.text_embedder);
  const auto images = b.generator->generate({"a photo of a nurse", "", 2, "k"});
  std::vector<FaceObservationSet> sets;
  std::vector<AttributeProfile> flat;
  for (const auto& img : images) {
    sets.push_back(analyze_faces(img, *b.detector, *b.image_embedder, bank));
    for (const auto& f : sets.back().faces) flat.push_back(f.profile);
  }
  const auto counts = aggregate_counts(sets, schema);
  const auto flat_counts = aggregate_profiles(flat, schema);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    c.expect(counts[a].total() == 6, schema.attributes[a].name + " total != 6");
    c.expect(normalized_entropy(counts[a]) == normalized_entropy(flat_counts[a]),
             schema.attributes[a].name + " aggregated entropy != flattened");
  }
  c.expect(expand_box({100, 100, 50, 50}, 1024, 1024) == FaceBox{50, 50, 150, 150},
           "expand_box centered");
  c.expect(expand_box({0, 0, 60, 60}, 200, 200) == FaceBox{0, 0, 120, 120},
           "expand_box clipped");
}

long double brute_mmd2(const std::vector<Embedding>& x, const std::vector<Embedding>& y,
                       bool cubic, long double bw) {
  auto k = [&](const Embedding& a, const Embedding& b) -> long double {
    long double dot = 0, sq = 0;
    for (std::size_t d = 0; d < a.dim(); ++d) {
      const long double p = a.values()[d], q = b.values()[d];
      dot += p * q;
      sq += (p - q) * (p - q);
    }
    if (cubic) {
      const long double t = dot / static_cast<long double>(a.dim()) + 1;
      return t * t * t;
    }
    return std::exp(-sq / (2 * bw * bw));
  };
  const long double m = x.size(), n = y.size();
  long double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) sxx += k(x[i], x[j]);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (i != j) syy += k(y[i], y[j]);
  for (const auto& a : x)
    for (const auto& b : y) sxy += k(a, b);
  return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2 * sxy / (m * n);
}

std::vector<Embedding> cloud(std::mt19937_64& rng, std::size_t n, double shift) {
  std::normal_distribution<double> normal;
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = normal(rng) + shift;
    out.push_back(Embedding::normalized(std::move(v)));
  }
  return out;
}

void kernel_metrics(Check& c) {
  std::mt19937_64 rng(99);
  for (std::size_t n : {2, 10, 100, 500}) {
    const auto x = cloud(rng, n, 0.0);
    const auto y = cloud(rng, n, 0.3);
    const double bw = median_bandwidth(x, y);
    const std::string tag = " n=" + std::to_string(n);
    c.near(kid(x, y), static_cast<double>(brute_mmd2(x, y, true, 0)), 1e-9, "kid" + tag);
    c.near(mmd2_rbf(x, y, bw), static_cast<double>(brute_mmd2(x, y, false, bw)), 1e-9,
           "mmd2_rbf" + tag);
    const double bound = 2.0 / static_cast<double>(n);
    for (double self : {kid(x, x), mmd2_rbf(x, x, bw)}) {
      c.expect(self <= 0.0 && std::abs(self) <= bound,
               "self-comparison" + tag + " = " + std::to_string(self));
    }
  }
}

class Scripted : public IterationEvaluator {
 public:
  Scripted(std::vector<double> f, std::vector<double> clip)
      : f_(std::move(f)), clip_(std::move(clip)) {}
  IterationOutcome run(int t, const std::string&) override {
    IterationOutcome o;
    o.prompts = {"p"};
    const auto i = static_cast<std::size_t>(t);
    if (i < f_.size()) o.metrics = MetricSnapshot{{{"gender", f_[i]}}, clip_[i], f_[i]};
    return o;
  }

 private:
  std::vector<double> f_, clip_;
};

class Numbered : public Reasoner {
 public:
  std::string chat(std::span<const ChatMessage>) override {
    return "cot " + std::to_string(++calls_);
  }
  Health health() override { return {true, "numbered", "", 0}; }
  std::string identity() const override { return "numbered"; }

 private:
  int calls_ = 0;
};

void stop_rules(Check& c) {
  {
    Scripted eval({0.50, 0.60, 0.58}, {0.28, 0.27, 0.27});
    Numbered r;
    const auto res = run_refinement("Nurse", RunConfig{}, r, eval);
    c.expect(res.iterations.size() == 3 &&
                 res.iterations[2].decision == Decision::kStoppedNoImprovement,
             "first trajectory stops at t2 on no improvement");
    c.expect(res.selected == 1 && res.selected_record().cot_text == "cot 1",
             "first trajectory selects t1");
  }
  {
    Scripted eval({0.50, 0.90}, {0.28, 0.20});
    Numbered r;
    const auto res = run_refinement("Nurse", RunConfig{}, r, eval);
    c.expect(res.iterations.size() == 2 &&
                 res.iterations[1].decision == Decision::kStoppedAlignment,
             "second trajectory stops at t1 on alignment");
    c.expect(res.selected == 0 && res.selected_record().cot_text == kDefaultCot0,
             "second trajectory selects t0");
  }
}

CoTRecord pool_record(const std::string& id, const std::string& profession,
                      double fairness) {
  CoTRecord r;
  r.id = id;
  r.profession = profession;
  r.area = area_of(profession, ProfessionAreaMap::defaults());
  r.cot_text = "cot for " + profession;
  r.prompts = {"p"};
  r.metrics = {{{"gender", fairness}}, 0.27, fairness};
  r.run_id = "run";
  r.created_at = "2026-01-01T00:00:00Z";
  return r;
}

void pool_behavior(Check& c) {
  const fs::path dir = scratch_dir("pool");
  const fs::path path = dir / "pool.jsonl";
  DemonstrationPool pool(path);
  pool.append(pool_record("cot-1", "Teacher", 0.9));
  pool.append(pool_record("cot-2", "Nurse", 0.8));
  pool.append(pool_record("cot-3", "Bus Driver", 0.95));
  pool.append(pool_record("cot-4", "Mechanical Engineer", 0.7));
  const auto areas = ProfessionAreaMap::defaults();

  const auto area = select_cot(pool, "Doctor", SelectionStrategy::kArea, 0, nullptr, areas);
  c.expect(pool.records()[area.index].profession == "Nurse", "Doctor maps to Nurse");

  bool stable = true;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    stable = stable &&
             select_cot(pool, "Doctor", SelectionStrategy::kRandom, seed, nullptr, areas).index ==
                 select_cot(pool, "Doctor", SelectionStrategy::kRandom, seed, nullptr, areas).index;
  }
  c.expect(stable, "seeded random selection repeats");

  const std::string bytes = read_text_file(path);
  const DemonstrationPool back = DemonstrationPool::load(path);
  c.expect(back.records() == pool.records() && back.serialize() == bytes,
           "pool round-trips bit-exactly");

  pool.before_rename = [] { throw Error(ErrorCode::kIo, "injected crash"); };
  bool threw = false;
  try {
    pool.append(pool_record("cot-5", "Judge", 0.5));
  } catch (const Error&) {
    threw = true;
  }
  c.expect(threw, "injected crash surfaces as an error");
  c.expect(read_text_file(path) == bytes && DemonstrationPool::load(path).size() == 4 &&
               pool.size() == 4,
           "old pool survives a crash between write and rename");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace fairprompt

int main() {
  using fairprompt::Check;
  using fairprompt::Criterion;
  const std::vector<Criterion> criteria = {
      {"metrics golden values", fairprompt::metrics_golden},
      {"religion attire agreement", fairprompt::religion_agreement},
      {"end-to-end simulated refinement", fairprompt::end_to_end},
      {"predictor oracle equivalence", fairprompt::predictor_oracle},
      {"multiface conservation", fairprompt::multiface_conservation},
      {"kernel metrics", fairprompt::kernel_metrics},
      {"refinement stop-rule fixtures", fairprompt::stop_rules},
      {"pool behavior", fairprompt::pool_behavior},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Check check;
    try {
      c.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = check.failures().empty();
    std::cout << (ok ? "PASS" : "FAIL") << "  " << c.name << "\n";
    for (const auto& f : check.failures()) std::cout << "  - " << f << "\n";
    failed += ok ? 0 : 1;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/"
            << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
