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

#ifndef FAIRPROMPT_EVALUATION_H_
#define FAIRPROMPT_EVALUATION_H_

#include <optional>
#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/metrics.h"
#include "fairprompt/multiface.h"
#include "fairprompt/predictor.h"
#include "fairprompt/schema.h"

namespace fairprompt {

struct EvaluationOptions {
  bool multiface = false;
  double expand_factor = 3.0;
  ReligionMode religion_mode = ReligionMode::kAttire;
  bool neutral_in_religion = true;
  FairnessAggregation aggregation = FairnessAggregation::kMean;
  std::size_t concurrency = 8;
};

struct ImageEvaluation {
  ImageRef image;
  std::string prompt;  // empty when the originating prompt is unknown
  std::optional<double> clip_t;
  // One profile in single-face mode; one per detected face otherwise.
  std::vector<FaceObservation> faces;
  std::vector<AttributeProfile> profiles;
};

struct BatchEvaluation {
  std::vector<ImageEvaluation> images;  // input order
  std::vector<CategoricalDistribution> counts;  // schema order
  std::optional<MetricSnapshot> snapshot;  // absent when no faces were counted
  bool has_clip_t = false;
  double clip_t = 0.0;
  std::int64_t faces = 0;
};

// Embeds and classifies each image. `prompts` is either empty or has one
// entry per image; CLIP-T is computed on whole images against their own
// prompts. In multiface mode zero-face images contribute nothing to counts.
BatchEvaluation evaluate_images(std::span<const ImageRef> images,
                                std::span<const std::string> prompts,
                                const BackendSet& backends,
                                const PromptBank& bank,
                                const EvaluationOptions& options);

}  // namespace fairprompt

#endif  // FAIRPROMPT_EVALUATION_H_
