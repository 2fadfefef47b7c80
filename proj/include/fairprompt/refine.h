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

#ifndef FAIRPROMPT_REFINE_H_
#define FAIRPROMPT_REFINE_H_

#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/evaluation.h"
#include "fairprompt/metrics.h"
#include "fairprompt/schema.h"

namespace fairprompt {

enum class Decision {
  kRefined,
  kStoppedNoImprovement,
  kStoppedAlignment,
  kStoppedMaxIter,
};

std::string_view to_string(Decision decision);
Decision parse_decision(std::string_view text);

struct ContinueCheck {
  bool proceed = false;
  // kRefined when proceeding, otherwise the stop reason.
  Decision reason = Decision::kRefined;

  bool operator==(const ContinueCheck&) const = default;
};

// (curr.fairness > prev.fairness) AND (curr.clip_t > tau * baseline_clip_t).
// A fairness failure is reported before an alignment failure.
ContinueCheck should_continue(const MetricSnapshot& curr,
                              const MetricSnapshot& prev,
                              double baseline_clip_t, double tau);

struct IterationRecord {
  int index = 0;
  std::string cot_text;
  std::vector<std::string> prompts;
  std::vector<ImageRef> images;
  std::vector<CategoricalDistribution> counts;
  MetricSnapshot metrics;
  Decision decision = Decision::kRefined;
  std::string note;

  bool operator==(const IterationRecord&) const = default;
};

struct RefinementResult {
  std::string profession;
  std::vector<IterationRecord> iterations;
  std::size_t selected = 0;
  MetricSnapshot baseline;

  const IterationRecord& selected_record() const {
    return iterations.at(selected);
  }
};

// Produces the images and metrics of one iteration for a given CoT.
struct IterationOutcome {
  std::vector<std::string> prompts;
  std::vector<ImageRef> images;
  std::vector<CategoricalDistribution> counts;
  std::optional<MetricSnapshot> metrics;
};

class IterationEvaluator {
 public:
  virtual ~IterationEvaluator() = default;
  virtual IterationOutcome run(int iteration, const std::string& cot) = 0;
};

// Generates images_per_prompt images for "<n> photos of <profession>" with
// the CoT as generation context, then evaluates them.
class BackendEvaluator : public IterationEvaluator {
 public:
  BackendEvaluator(std::string profession, const RunConfig& config,
                   const BackendSet& backends, const PromptBank& bank,
                   EvaluationOptions options, std::string run_id);
  IterationOutcome run(int iteration, const std::string& cot) override;

 private:
  std::string profession_;
  RunConfig config_;
  BackendSet backends_;
  const PromptBank& bank_;
  EvaluationOptions options_;
  std::string run_id_;
};

// Receives every iteration as soon as its decision is known.
class IterationSink {
 public:
  virtual ~IterationSink() = default;
  virtual void on_iteration(const IterationRecord& record) = 0;
};

// Picks the iteration with the highest fairness among those whose CLIP-T is
// at least tau * baseline; t0 is always admissible and ties go to the
// earliest iteration.
std::size_t select_iteration(const std::vector<IterationRecord>& iterations,
                             double tau);

// Runs the refinement loop. t0 uses config.cot0_text and always refines; an
// empty reply from the reasoner ends the run as stopped_no_improvement.
// Throws Error(kAborted) when an iteration yields no countable faces.
RefinementResult run_refinement(const std::string& profession,
                                const RunConfig& config, Reasoner& reasoner,
                                IterationEvaluator& evaluator,
                                IterationSink* sink = nullptr);

}  // namespace fairprompt

#endif  // FAIRPROMPT_REFINE_H_
