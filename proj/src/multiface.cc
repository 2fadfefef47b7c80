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

#include "fairprompt/multiface.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "fairprompt/common.h"

namespace fairprompt {

FaceBox expand_box(const FaceBox& box, int image_w, int image_h,
                   double factor) {
  if (box.w < 1 || box.h < 1 || box.x < 0 || box.y < 0 ||
      box.x + box.w > image_w || box.y + box.h > image_h) {
    throw Error(ErrorCode::kInvalidArgument,
                "face box (" + std::to_string(box.x) + "," +
                    std::to_string(box.y) + "," + std::to_string(box.w) + "," +
                    std::to_string(box.h) + ") is not inside a " +
                    std::to_string(image_w) + "x" + std::to_string(image_h) +
                    " image");
  }
  if (!(factor >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "expansion factor must be >= 1");
  }
  const double cx = box.x + box.w / 2.0;
  const double cy = box.y + box.h / 2.0;
  const double half_w = factor * box.w / 2.0;
  const double half_h = factor * box.h / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - half_w)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - half_h)));
  const int x1 = std::min(image_w, static_cast<int>(std::ceil(cx + half_w)));
  const int y1 = std::min(image_h, static_cast<int>(std::ceil(cy + half_h)));
  return {x0, y0, x1 - x0, y1 - y0};
}

FaceObservationSet analyze_faces(const ImageRef& image, FaceDetector& detector,
                                 ImageEmbedder& embedder,
                                 const PromptBank& bank,
                                 const MultifaceOptions& options) {
  FaceObservationSet out{image.id, {}};
  Detection det;
  try {
    det = detector.detect(image);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (image " + image.id + ")",
                e.key_path(), e.detail());
  }
  std::vector<FaceBox> boxes = det.boxes;
  std::sort(boxes.begin(), boxes.end(), [](const FaceBox& a, const FaceBox& b) {
    return std::tie(a.y, a.x, a.h, a.w) < std::tie(b.y, b.x, b.h, b.w);
  });
  if (boxes.empty()) return out;

  std::vector<ImageRegion> regions;
  for (const auto& b : boxes) {
    FaceObservation obs;
    obs.box = b;
    obs.expanded =
        expand_box(b, det.image_width, det.image_height, options.expand_factor);
    regions.push_back({image, obs.expanded});
    out.faces.push_back(std::move(obs));
  }
  std::vector<Embedding> vectors;
  try {
    vectors = embedder.embed(regions);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (image " + image.id + ")",
                e.key_path(), e.detail());
  }
  for (std::size_t i = 0; i < out.faces.size(); ++i) {
    out.faces[i].profile =
        predict_profile(vectors[i], bank, options.religion_mode,
                        ProfileSource{static_cast<int>(i)});
  }
  return out;
}

namespace {

std::vector<CategoricalDistribution> empty_counts(const AttributeSchema& schema,
                                                  bool neutral_in_religion) {
  std::vector<CategoricalDistribution> out;
  for (const auto& a : schema.attributes) {
    std::vector<std::string> cats;
    for (const auto& c : a.categories) {
      if (a.is_religion && !neutral_in_religion && c == kNeutralCategory) {
        continue;
      }
      cats.push_back(c);
    }
    out.push_back(CategoricalDistribution::zeros(std::move(cats)));
  }
  return out;
}

void tally(const AttributeProfile& p, const AttributeSchema& schema,
           bool neutral_in_religion,
           std::vector<CategoricalDistribution>& counts) {
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const AttributeDef& a = schema.attributes[i];
    const std::string& cat = p.call(a.name).category;
    if (a.is_religion && !neutral_in_religion && cat == kNeutralCategory) {
      continue;
    }
    counts[i].add(cat);
  }
}

}  // namespace

std::vector<CategoricalDistribution> aggregate_counts(
    std::span<const FaceObservationSet> observations,
    const AttributeSchema& schema, bool neutral_in_religion) {
  auto counts = empty_counts(schema, neutral_in_religion);
  for (const auto& set : observations) {
    for (const auto& face : set.faces) {
      tally(face.profile, schema, neutral_in_religion, counts);
    }
  }
  return counts;
}

std::vector<CategoricalDistribution> aggregate_profiles(
    std::span<const AttributeProfile> profiles, const AttributeSchema& schema,
    bool neutral_in_religion) {
  auto counts = empty_counts(schema, neutral_in_religion);
  for (const auto& p : profiles) tally(p, schema, neutral_in_religion, counts);
  return counts;
}

}  // namespace fairprompt
