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

#include "fairprompt/backends.h"

#include "fairprompt/common.h"

namespace fairprompt {

namespace {

void check_embeddings(const std::vector<Embedding>& out, std::size_t expected,
                      std::mutex& mu, std::size_t& dim,
                      std::string_view port) {
  if (out.size() != expected) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string(port) + " returned " + std::to_string(out.size()) +
                    " vectors for " + std::to_string(expected) + " inputs");
  }
  std::lock_guard lock(mu);
  for (const auto& v : out) {
    if (!v.is_unit(kUnitNormTolerance)) {
      throw Error(ErrorCode::kMalformedResponse,
                  std::string(port) + " returned a vector with norm " +
                      std::to_string(v.norm()) + " (expected unit norm)");
    }
    if (dim == 0) dim = v.dim();
    if (v.dim() != dim) {
      throw Error(ErrorCode::kMalformedResponse,
                  std::string(port) + " changed embedding dimension from " +
                      std::to_string(dim) + " to " + std::to_string(v.dim()));
    }
  }
}

}  // namespace

std::vector<Embedding> TextEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  auto out = do_embed(texts);
  check_embeddings(out, texts.size(), mu_, dim_, "text embedder");
  return out;
}

std::vector<Embedding> ImageEmbedder::embed(
    std::span<const ImageRegion> regions) {
  if (regions.empty()) return {};
  auto out = do_embed(regions);
  check_embeddings(out, regions.size(), mu_, dim_, "image embedder");
  return out;
}

std::map<std::string, std::string> BackendSet::identities() const {
  std::map<std::string, std::string> out;
  if (generator) out["generator"] = generator->identity();
  if (reasoner) out["reasoner"] = reasoner->identity();
  if (text_embedder) out["text_embedder"] = text_embedder->identity();
  if (image_embedder) out["image_embedder"] = image_embedder->identity();
  if (detector) out["detector"] = detector->identity();
  return out;
}

}  // namespace fairprompt
