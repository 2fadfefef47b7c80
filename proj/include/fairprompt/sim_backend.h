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

#ifndef FAIRPROMPT_SIM_BACKEND_H_
#define FAIRPROMPT_SIM_BACKEND_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fairprompt/backends.h"
#include "fairprompt/schema.h"

namespace fairprompt {

// A word that, when present in a prompt or chain of thought, pushes the
// generator's output for `attribute` towards uniform.
struct KeywordSensitivity {
  std::string keyword;  // lower-case single token
  std::string attribute;
  std::string category;
};

// Deterministic stand-in for a biased text-to-image model.
//
// For each attribute the generator samples from
//   (1 - m*lambda) * baseline + m*lambda * uniform,
// with m the number of that attribute's keywords present in the request
// text and m*lambda clamped to 1. Within one request the faces are drawn by
// systematic sampling, so counts track the distribution to within one face
// per category. Image embeddings are planted: one basis
// direction per (attribute, category) plus a content direction equal to the
// simulated text embedding of the generating prompt, plus seeded noise of
// norm `noise`. With noise < max_recoverable_noise() the zero-shot
// predictor recovers the planted categories exactly.
struct BiasProfile {
  std::map<std::string, std::vector<double>> baseline;  // schema category order
  std::vector<KeywordSensitivity> keywords;
  double mixing_weight = 0.5;
  std::uint64_t seed = 0;
  double noise = 0.05;
  // Weight of the content direction; CLIP-T of an unmixed image is close to
  // this value.
  double alignment = 0.3;
  // Relative alignment loss per attribute whose keywords are present.
  double alignment_drift = 0.02;
  int faces_per_image = 1;
  int content_dim = 16;
  int image_size = 1024;

  static BiasProfile defaults(const AttributeSchema& schema);
  void validate(const AttributeSchema& schema) const;

  // Keywords of `attribute` in declaration order.
  std::vector<std::string> keywords_for(std::string_view attribute) const;
  double max_recoverable_noise(const AttributeSchema& schema) const;
};

// Geometry shared by the simulated ports.
class SimWorld {
 public:
  SimWorld(AttributeSchema schema, BiasProfile profile,
           std::shared_ptr<ImageStore> store);

  const AttributeSchema& schema() const { return schema_; }
  const BiasProfile& profile() const { return profile_; }
  ImageStore& store() const { return *store_; }
  std::size_t dim() const { return blocks_ + content_dim_; }

  // Effective per-attribute distribution for a request text.
  std::vector<double> effective_distribution(std::size_t attribute,
                                             std::string_view text) const;
  int keyword_hits(std::size_t attribute, std::string_view text) const;

  Embedding text_embedding(const std::string& text) const;
  Embedding image_embedding(const ImageRegion& region) const;

  // Planted per-face categories (schema attribute order) of a sim image.
  struct PlantedFace {
    FaceBox box;
    std::vector<std::string> categories;
  };
  struct PlantedImage {
    int width = 0;
    int height = 0;
    std::string prompt;
    double alignment = 0.0;
    std::vector<PlantedFace> faces;
  };
  PlantedImage read_image(const ImageRef& ref) const;
  std::vector<ImageRef> generate(const GenerationRequest& request) const;

 private:
  std::size_t block_of(std::size_t attribute, std::size_t category) const;
  std::vector<double> content_vector(const std::string& text) const;

  AttributeSchema schema_;
  BiasProfile profile_;
  std::shared_ptr<ImageStore> store_;
  std::vector<std::size_t> block_offset_;
  std::size_t blocks_ = 0;
  std::size_t content_dim_ = 0;
  std::map<std::string, std::size_t> prompt_block_;
};

class SimGenerator : public ImageGenerator {
 public:
  explicit SimGenerator(std::shared_ptr<const SimWorld> world)
      : world_(std::move(world)) {}
  std::vector<ImageRef> generate(const GenerationRequest& request) override;
  Health health() override;
  std::string identity() const override;

 private:
  std::shared_ptr<const SimWorld> world_;
};

// Template reasoner. Each "think again" turn adds the full keyword set of one
// more attribute (schema order) to the chain of thought; once every
// attribute is covered the text stops changing.
class SimReasoner : public Reasoner {
 public:
  explicit SimReasoner(std::shared_ptr<const SimWorld> world)
      : world_(std::move(world)) {}
  std::string chat(std::span<const ChatMessage> messages) override;
  Health health() override;
  std::string identity() const override;

  std::string cot_for(std::string_view profession, int covered) const;

 private:
  std::shared_ptr<const SimWorld> world_;
};

class SimTextEmbedder : public TextEmbedder {
 public:
  explicit SimTextEmbedder(std::shared_ptr<const SimWorld> world)
      : world_(std::move(world)) {}
  Health health() override;
  std::string identity() const override;

 protected:
  std::vector<Embedding> do_embed(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<const SimWorld> world_;
};

class SimImageEmbedder : public ImageEmbedder {
 public:
  explicit SimImageEmbedder(std::shared_ptr<const SimWorld> world)
      : world_(std::move(world)) {}
  Health health() override;
  std::string identity() const override;

 protected:
  std::vector<Embedding> do_embed(
      std::span<const ImageRegion> regions) override;

 private:
  std::shared_ptr<const SimWorld> world_;
};

// Returns planted boxes in reverse planting order.
class SimDetector : public FaceDetector {
 public:
  explicit SimDetector(std::shared_ptr<const SimWorld> world)
      : world_(std::move(world)) {}
  Detection detect(const ImageRef& image) override;
  Health health() override;
  std::string identity() const override;

 private:
  std::shared_ptr<const SimWorld> world_;
};

BackendSet make_sim_backends(const AttributeSchema& schema,
                             const BiasProfile& profile,
                             std::shared_ptr<ImageStore> store);

nlohmann::json to_json(const BiasProfile& profile);
BiasProfile bias_profile_from_json(const nlohmann::json& j);

}  // namespace fairprompt

#endif  // FAIRPROMPT_SIM_BACKEND_H_
