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

#include "fairprompt/templates.h"

namespace fairprompt {

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::kRefined: return "refined";
    case Decision::kStoppedNoImprovement: return "stopped_no_improvement";
    case Decision::kStoppedAlignment: return "stopped_alignment";
    case Decision::kStoppedMaxIter: return "stopped_max_iter";
  }
  return "refined";
}

Decision parse_decision(std::string_view text) {
  for (Decision d : {Decision::kRefined, Decision::kStoppedNoImprovement,
                     Decision::kStoppedAlignment, Decision::kStoppedMaxIter}) {
    if (to_string(d) == text) return d;
  }
  throw Error(ErrorCode::kParse, "unknown decision '" + std::string(text) + "'");
}

ContinueCheck should_continue(const MetricSnapshot& curr,
                              const MetricSnapshot& prev,
                              double baseline_clip_t, double tau) {
  if (!(curr.fairness_score > prev.fairness_score)) {
    return {false, Decision::kStoppedNoImprovement};
  }
  if (!(curr.clip_t > tau * baseline_clip_t)) {
    return {false, Decision::kStoppedAlignment};
  }
  return {true, Decision::kRefined};
}

std::size_t select_iteration(const std::vector<IterationRecord>& iterations,
                             double tau) {
  if (iterations.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no iterations to select from");
  }
  const double floor = tau * iterations.front().metrics.clip_t;
  std::size_t best = 0;
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    const auto& m = iterations[i].metrics;
    if (m.clip_t < floor) continue;
    if (m.fairness_score > iterations[best].metrics.fairness_score) best = i;
  }
  return best;
}

BackendEvaluator::BackendEvaluator(std::string profession,
                                   const RunConfig& config,
                                   const BackendSet& backends,
                                   const PromptBank& bank,
                                   EvaluationOptions options,
                                   std::string run_id)
    : profession_(std::move(profession)),
      config_(config),
      backends_(backends),
      bank_(bank),
      options_(options),
      run_id_(std::move(run_id)) {}

IterationOutcome BackendEvaluator::run(int iteration, const std::string& cot) {
  auto& generator = require_port(backends_.generator, "generator");
  const int n = config_.images_per_prompt;
  GenerationRequest request{initial_prompt(profession_, n), cot, n,
                            run_id_ + "/t" + std::to_string(iteration)};
  IterationOutcome out;
  out.images = generator.generate(request);
  if (out.images.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::kMalformedResponse,
                "generator returned " + std::to_string(out.images.size()) +
                    " images, expected " + std::to_string(n));
  }
  out.prompts.assign(out.images.size(), request.prompt);
  BatchEvaluation eval =
      evaluate_images(out.images, out.prompts, backends_, bank_, options_);
  out.counts = std::move(eval.counts);
  out.metrics = std::move(eval.snapshot);
  return out;
}

RefinementResult run_refinement(const std::string& profession,
                                const RunConfig& config, Reasoner& reasoner,
                                IterationEvaluator& evaluator,
                                IterationSink* sink) {
  config.validate();
  RefinementResult result;
  result.profession = profession;

  std::vector<ChatMessage> history{
      {"user", cot_generation_opening(profession, config.cot0_text,
                                      config.images_per_prompt)},
      {"assistant", config.cot0_text}};
  std::string cot = config.cot0_text;

  for (int t = 0;; ++t) {
    IterationOutcome outcome = evaluator.run(t, cot);
    if (!outcome.metrics) {
      throw Error(ErrorCode::kAborted,
                  "iteration " + std::to_string(t) +
                      " produced no countable faces; metrics are undefined");
    }
    IterationRecord rec;
    rec.index = t;
    rec.cot_text = cot;
    rec.prompts = std::move(outcome.prompts);
    rec.images = std::move(outcome.images);
    rec.counts = std::move(outcome.counts);
    rec.metrics = *outcome.metrics;

    if (t == 0) {
      result.baseline = rec.metrics;
    } else {
      const ContinueCheck check =
          should_continue(rec.metrics, result.iterations.back().metrics,
                          result.baseline.clip_t, config.tau);
      rec.decision = check.reason;
    }
    if (rec.decision == Decision::kRefined && t >= config.max_iterations) {
      rec.decision = Decision::kStoppedMaxIter;
    }

    std::string next;
    if (rec.decision == Decision::kRefined) {
      history.push_back({"user", config.refine_prompt_text});
      next = trim(reasoner.chat(history));
      if (next.empty()) {
        rec.decision = Decision::kStoppedNoImprovement;
        rec.note = "reasoner returned an empty chain of thought";
      } else {
        history.push_back({"assistant", next});
      }
    }

    if (sink) sink->on_iteration(rec);
    const bool done = rec.decision != Decision::kRefined;
    result.iterations.push_back(std::move(rec));
    if (done) break;
    cot = std::move(next);
  }

  result.selected = select_iteration(result.iterations, config.tau);
  return result;
}

}  // namespace fairprompt
