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

#include "fairprompt/refine.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "fairprompt/common.h"
#include "fairprompt/sim_backend.h"

namespace fairprompt {
namespace {

using ::testing::ElementsAre;

MetricSnapshot snap(double fairness, double clip) {
  return {{{"gender", fairness}}, clip, fairness};
}

class ScriptedEvaluator : public IterationEvaluator {
 public:
  ScriptedEvaluator(std::vector<double> fairness, std::vector<double> clip)
      : fairness_(std::move(fairness)), clip_(std::move(clip)) {}

  IterationOutcome run(int t, const std::string& cot) override {
    cots.push_back(cot);
    IterationOutcome out;
    out.prompts = {"p"};
    const auto i = static_cast<std::size_t>(t);
    if (i < fairness_.size()) out.metrics = snap(fairness_[i], clip_[i]);
    return out;
  }

  std::vector<std::string> cots;

 private:
  std::vector<double> fairness_;
  std::vector<double> clip_;
};

class CountingReasoner : public Reasoner {
 public:
  std::string chat(std::span<const ChatMessage> messages) override {
    last = {messages.begin(), messages.end()};
    return reply.empty() ? "" : reply + " " + std::to_string(++calls);
  }
  Health health() override { return {true, "counting", "", 0}; }
  std::string identity() const override { return "counting"; }

  std::string reply = "cot";
  int calls = 0;
  std::vector<ChatMessage> last;
};

class RecordingSink : public IterationSink {
 public:
  void on_iteration(const IterationRecord& r) override {
    indices.push_back(r.index);
  }
  std::vector<int> indices;
};

TEST(ShouldContinueTest, Cases) {
  EXPECT_EQ(should_continue(snap(0.6, 0.27), snap(0.5, 0.28), 0.28, 0.9),
            (ContinueCheck{true, Decision::kRefined}));
  EXPECT_EQ(should_continue(snap(0.5, 0.28), snap(0.5, 0.28), 0.28, 0.9),
            (ContinueCheck{false, Decision::kStoppedNoImprovement}));
  EXPECT_EQ(should_continue(snap(0.6, 0.25), snap(0.5, 0.28), 0.5, 0.5),
            (ContinueCheck{false, Decision::kStoppedAlignment}));
  // Both conditions fail: fairness is reported.
  EXPECT_EQ(should_continue(snap(0.4, 0.1), snap(0.5, 0.28), 0.28, 0.9).reason,
            Decision::kStoppedNoImprovement);
}

TEST(RefineTest, StopsOnNoImprovementAtT2) {
  ScriptedEvaluator eval({0.50, 0.60, 0.58}, {0.28, 0.27, 0.27});
  CountingReasoner reasoner;
  RecordingSink sink;
  RunConfig config;
  const RefinementResult r =
      run_refinement("Nurse", config, reasoner, eval, &sink);
  ASSERT_EQ(r.iterations.size(), 3u);
  EXPECT_EQ(r.iterations[0].decision, Decision::kRefined);
  EXPECT_EQ(r.iterations[1].decision, Decision::kRefined);
  EXPECT_EQ(r.iterations[2].decision, Decision::kStoppedNoImprovement);
  EXPECT_EQ(r.selected, 1u);
  EXPECT_EQ(r.selected_record().cot_text, "cot 1");
  EXPECT_EQ(r.iterations[0].cot_text, std::string(kDefaultCot0));
  EXPECT_THAT(sink.indices, ElementsAre(0, 1, 2));
  EXPECT_DOUBLE_EQ(r.baseline.clip_t, 0.28);
}

TEST(RefineTest, StopsOnAlignmentAtT1) {
  ScriptedEvaluator eval({0.50, 0.90}, {0.28, 0.20});
  CountingReasoner reasoner;
  const RefinementResult r = run_refinement("Nurse", RunConfig{}, reasoner, eval);
  ASSERT_EQ(r.iterations.size(), 2u);
  EXPECT_EQ(r.iterations[1].decision, Decision::kStoppedAlignment);
  EXPECT_EQ(r.selected, 0u);
  EXPECT_EQ(r.selected_record().cot_text, std::string(kDefaultCot0));
}

TEST(RefineTest, MaxIterationsCapsTheRun) {
  ScriptedEvaluator eval({0.1, 0.2, 0.3, 0.4}, {0.3, 0.3, 0.3, 0.3});
  CountingReasoner reasoner;
  RunConfig config;
  config.max_iterations = 1;
  const RefinementResult r = run_refinement("Nurse", config, reasoner, eval);
  ASSERT_EQ(r.iterations.size(), 2u);
  EXPECT_EQ(r.iterations[1].decision, Decision::kStoppedMaxIter);
  EXPECT_EQ(reasoner.calls, 1);
  EXPECT_EQ(r.selected, 1u);
}

TEST(RefineTest, EmptyCotStopsWithNote) {
  ScriptedEvaluator eval({0.5, 0.6}, {0.3, 0.3});
  CountingReasoner reasoner;
  reasoner.reply.clear();
  const RefinementResult r = run_refinement("Nurse", RunConfig{}, reasoner, eval);
  ASSERT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].decision, Decision::kStoppedNoImprovement);
  EXPECT_FALSE(r.iterations[0].note.empty());
}

TEST(RefineTest, UndefinedMetricsAbort) {
  ScriptedEvaluator eval({0.5}, {0.3});
  CountingReasoner reasoner;
  try {
    run_refinement("Nurse", RunConfig{}, reasoner, eval);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAborted);
  }
}

TEST(RefineTest, ConversationHistoryGrowsByRefineTurns) {
  ScriptedEvaluator eval({0.5, 0.6, 0.7}, {0.3, 0.3, 0.3});
  CountingReasoner reasoner;
  RunConfig config;
  config.max_iterations = 2;
  run_refinement("Nurse", config, reasoner, eval);
  ASSERT_EQ(reasoner.last.size(), 5u);
  EXPECT_EQ(reasoner.last[0].role, "user");
  EXPECT_EQ(reasoner.last[1].content, std::string(kDefaultCot0));
  EXPECT_EQ(reasoner.last[2].content, std::string(kDefaultRefinePrompt));
  EXPECT_EQ(reasoner.last[3].content, "cot 1");
  EXPECT_EQ(reasoner.last[4].content, std::string(kDefaultRefinePrompt));
  EXPECT_THAT(eval.cots, ElementsAre(std::string(kDefaultCot0), "cot 1", "cot 2"));
}

TEST(SelectIterationTest, HighestAdmissibleFairnessEarliestTie) {
  std::vector<IterationRecord> its(4);
  its[0].metrics = snap(0.5, 0.30);
  its[1].metrics = snap(0.9, 0.10);  // below 0.5 * 0.30
  its[2].metrics = snap(0.7, 0.15);  // exactly at the floor is admissible
  its[3].metrics = snap(0.7, 0.29);
  EXPECT_EQ(select_iteration(its, 0.5), 2u);
  EXPECT_THROW(select_iteration({}, 0.9), Error);
}

TEST(DecisionTest, NamesRoundTrip) {
  for (Decision d : {Decision::kRefined, Decision::kStoppedNoImprovement,
                     Decision::kStoppedAlignment, Decision::kStoppedMaxIter}) {
    EXPECT_EQ(parse_decision(to_string(d)), d);
  }
  EXPECT_THROW(parse_decision("done"), Error);
}

TEST(RefineSimTest, SeededRunConvergesWithinCap) {
  const AttributeSchema schema = AttributeSchema::defaults();
  BiasProfile profile = BiasProfile::defaults(schema);
  profile.seed = substream_seed(7, "generation");
  BackendSet b = make_sim_backends(schema, profile, nullptr);
  const PromptBank bank = PromptBank::embed(schema, *b.text_embedder);
  RunConfig config;
  config.images_per_prompt = 200;
  BackendEvaluator eval("Nurse", config, b, bank, EvaluationOptions{}, "run");
  const RefinementResult r = run_refinement("Nurse", config, *b.reasoner, eval);
  EXPECT_LE(r.iterations.size(), 9u);
  EXPECT_NE(r.iterations.back().decision, Decision::kRefined);
  EXPECT_GE(r.selected_record().metrics.fairness_score, 0.95);
  EXPECT_GE(r.selected_record().metrics.clip_t, config.tau * r.baseline.clip_t);
}

}  // namespace
}  // namespace fairprompt
