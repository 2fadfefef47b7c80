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

#ifndef FAIRPROMPT_BACKENDS_H_
#define FAIRPROMPT_BACKENDS_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprompt/common.h"
#include "fairprompt/metrics.h"
#include "fairprompt/types.h"

namespace fairprompt {

// Content-addressed image storage. Bytes are always kept in memory; when a
// directory is set they are also written to <dir>/<sha256>.<ext>.
class ImageStore {
 public:
  explicit ImageStore(std::optional<std::filesystem::path> directory = {});

  ImageRef put(std::string bytes, std::string_view extension);
  std::string read(const ImageRef& ref) const;
  bool contains(const ImageRef& ref) const;
  const std::optional<std::filesystem::path>& directory() const {
    return directory_;
  }

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> bytes_;
};

struct Health {
  bool ok = false;
  std::string identity;
  std::string detail;
  int embedding_dim = 0;
};

// One entry of the remote call log written to the run manifest.
struct CallRecord {
  std::string endpoint;
  std::string request_digest;
  double latency_ms = 0.0;
  int retries = 0;
  int http_status = 0;
  bool ok = false;
};

class CallRecorder {
 public:
  virtual ~CallRecorder() = default;
  virtual void record(const CallRecord& call) = 0;
};

struct GenerationRequest {
  std::string prompt;
  // Chain-of-thought text steering the generator; may be empty.
  std::string context;
  int count = 1;
  // Stable per (run id, prompt index); repeated keys must not regenerate.
  std::string idempotency_key;
};

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ImageRegion {
  ImageRef image;
  std::optional<FaceBox> crop;
};

struct Detection {
  int image_width = 0;
  int image_height = 0;
  std::vector<FaceBox> boxes;
};

class ImageGenerator {
 public:
  virtual ~ImageGenerator() = default;
  virtual std::vector<ImageRef> generate(const GenerationRequest& request) = 0;
  virtual Health health() = 0;
  virtual std::string identity() const = 0;
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual std::string chat(std::span<const ChatMessage> messages) = 0;
  virtual Health health() = 0;
  virtual std::string identity() const = 0;
};

// Embedders enforce the unit-norm and fixed-dimension contract at the port
// boundary; implementations override do_embed.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  std::vector<Embedding> embed(std::span<const std::string> texts);
  virtual Health health() = 0;
  virtual std::string identity() const = 0;

 protected:
  virtual std::vector<Embedding> do_embed(
      std::span<const std::string> texts) = 0;

 private:
  std::mutex mu_;
  std::size_t dim_ = 0;
};

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  std::vector<Embedding> embed(std::span<const ImageRegion> regions);
  virtual Health health() = 0;
  virtual std::string identity() const = 0;

 protected:
  virtual std::vector<Embedding> do_embed(
      std::span<const ImageRegion> regions) = 0;

 private:
  std::mutex mu_;
  std::size_t dim_ = 0;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual Detection detect(const ImageRef& image) = 0;
  virtual Health health() = 0;
  virtual std::string identity() const = 0;
};

// The set of ports a command runs against. Absent ports are null.
struct BackendSet {
  std::shared_ptr<ImageStore> store;
  std::shared_ptr<ImageGenerator> generator;
  std::shared_ptr<Reasoner> reasoner;
  std::shared_ptr<TextEmbedder> text_embedder;
  std::shared_ptr<ImageEmbedder> image_embedder;
  std::shared_ptr<FaceDetector> detector;

  std::map<std::string, std::string> identities() const;
};

// Throws Error(kCapability) when `port` is null.
template <class T>
T& require_port(const std::shared_ptr<T>& port, std::string_view what) {
  if (!port) {
    throw Error(ErrorCode::kCapability,
                "backend has no " + std::string(what) + " port");
  }
  return *port;
}

inline constexpr double kUnitNormTolerance = 1e-4;

}  // namespace fairprompt

#endif  // FAIRPROMPT_BACKENDS_H_
