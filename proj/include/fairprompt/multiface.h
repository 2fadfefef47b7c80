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

#ifndef FAIRPROMPT_MULTIFACE_H_
#define FAIRPROMPT_MULTIFACE_H_

#include <span>
#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/metrics.h"
#include "fairprompt/predictor.h"
#include "fairprompt/types.h"

namespace fairprompt {

// Enlarges `box` to (factor*w, factor*h) about its center, then clips to
// [0, image_w] x [0, image_h]. Clipping truncates the region; it never
// shifts it back inside the image.
FaceBox expand_box(const FaceBox& box, int image_w, int image_h,
                   double factor = 3.0);

struct FaceObservation {
  FaceBox box;
  FaceBox expanded;
  AttributeProfile profile;
};

struct FaceObservationSet {
  std::string image_id;
  std::vector<FaceObservation> faces;  // ordered by (y, x) of `box`
};

struct MultifaceOptions {
  double expand_factor = 3.0;
  ReligionMode religion_mode = ReligionMode::kAttire;
};

// detect -> expand -> embed each crop -> predict one profile per face.
FaceObservationSet analyze_faces(const ImageRef& image, FaceDetector& detector,
                                 ImageEmbedder& embedder,
                                 const PromptBank& bank,
                                 const MultifaceOptions& options = {});

// Per-face counts for every schema attribute, in schema order. Religion
// "Neutral" is dropped from k when `neutral_in_religion` is false.
std::vector<CategoricalDistribution> aggregate_counts(
    std::span<const FaceObservationSet> observations,
    const AttributeSchema& schema, bool neutral_in_religion = true);

std::vector<CategoricalDistribution> aggregate_profiles(
    std::span<const AttributeProfile> profiles, const AttributeSchema& schema,
    bool neutral_in_religion = true);

inline constexpr std::string_view kNeutralCategory = "Neutral";

}  // namespace fairprompt

#endif  // FAIRPROMPT_MULTIFACE_H_
