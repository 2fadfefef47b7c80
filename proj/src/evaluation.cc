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

#include "fairprompt/evaluation.h"

#include <map>

namespace fairprompt {

BatchEvaluation evaluate_images(std::span<const ImageRef> images,
                                std::span<const std::string> prompts,
                                const BackendSet& backends,
                                const PromptBank& bank,
                                const EvaluationOptions& options) {
  if (!prompts.empty() && prompts.size() != images.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prompt list must be empty or match the image count");
  }
  auto& image_embedder = require_port(backends.image_embedder, "image embedder");
  const AttributeSchema& schema = bank.schema();

  BatchEvaluation out;
  out.images.resize(images.size());
  std::vector<ImageRegion> whole;
  whole.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.images[i].image = images[i];
    if (!prompts.empty()) out.images[i].prompt = prompts[i];
    whole.push_back({images[i], std::nullopt});
  }
  const std::vector<Embedding> image_vectors =
      images.empty() ? std::vector<Embedding>{} : image_embedder.embed(whole);

  if (!prompts.empty() && !images.empty()) {
    auto& text_embedder = require_port(backends.text_embedder, "text embedder");
    std::vector<std::string> unique;
    std::map<std::string, std::size_t> slot;
    for (const auto& p : prompts) {
      if (slot.emplace(p, unique.size()).second) unique.push_back(p);
    }
    const auto text_vectors = text_embedder.embed(unique);
    std::vector<Embedding> matched;
    matched.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      const Embedding& t = text_vectors[slot.at(prompts[i])];
      out.images[i].clip_t = cosine(image_vectors[i], t);
      matched.push_back(t);
    }
    out.has_clip_t = true;
    out.clip_t = clip_t(image_vectors, matched);
  }

  if (options.multiface) {
    auto& detector = require_port(backends.detector, "detector");
    MultifaceOptions mf{options.expand_factor, options.religion_mode};
    std::vector<FaceObservationSet> sets(images.size());
    parallel_for(images.size(), options.concurrency, [&](std::size_t i) {
      sets[i] = analyze_faces(images[i], detector, image_embedder, bank, mf);
    });
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (const auto& f : sets[i].faces) out.images[i].profiles.push_back(f.profile);
      out.images[i].faces = std::move(sets[i].faces);
    }
  } else {
    for (std::size_t i = 0; i < images.size(); ++i) {
      out.images[i].profiles.push_back(
          predict_profile(image_vectors[i], bank, options.religion_mode));
    }
  }

  std::vector<AttributeProfile> flat;
  for (const auto& img : out.images) {
    flat.insert(flat.end(), img.profiles.begin(), img.profiles.end());
  }
  out.faces = static_cast<std::int64_t>(flat.size());
  out.counts = aggregate_profiles(flat, schema, options.neutral_in_religion);

  bool defined = out.faces > 0;
  for (const auto& c : out.counts) defined = defined && c.total() > 0;
  if (defined) {
    std::vector<std::string> names;
    for (const auto& a : schema.attributes) names.push_back(a.name);
    out.snapshot = make_snapshot(out.counts, names, out.clip_t, options.aggregation);
  }
  return out;
}

}  // namespace fairprompt
