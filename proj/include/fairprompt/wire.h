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

#ifndef FAIRPROMPT_WIRE_H_
#define FAIRPROMPT_WIRE_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "fairprompt/backends.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace fairprompt {

// Endpoint paths and error codes of the backend wire protocol. The full
// protocol is documented in docs/wire_protocol.md.
namespace wire {

inline constexpr std::string_view kGenerate = "/generate";
inline constexpr std::string_view kChat = "/chat";
inline constexpr std::string_view kEmbedText = "/embed/text";
inline constexpr std::string_view kEmbedImage = "/embed/image";
inline constexpr std::string_view kDetect = "/detect";
inline constexpr std::string_view kHealth = "/health";

inline constexpr std::string_view kIdempotencyHeader = "Idempotency-Key";

nlohmann::json error_envelope(std::string_view code, std::string_view message);
nlohmann::json box_to_json(const FaceBox& box);
FaceBox box_from_json(const nlohmann::json& j);
nlohmann::json vectors_to_json(const std::vector<Embedding>& vectors);
std::vector<Embedding> vectors_from_json(const nlohmann::json& j,
                                         std::size_t expected);
nlohmann::json image_payload(const ImageStore& store, const ImageRef& ref);

// HTTP status carried by an error code in the envelope.
int http_status_for(ErrorCode code);

}  // namespace wire

struct RemoteOptions {
  std::string base_url;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
  std::chrono::milliseconds backoff_max{5000};
  std::chrono::seconds timeout{120};
  std::size_t batch_size = 32;
  std::size_t concurrency = 4;

  // Reads FAIRPROMPT_<PORT>_URL, falling back to FAIRPROMPT_BACKEND_URL, and
  // FAIRPROMPT_API_KEY. Returns nullopt when no URL is configured.
  static std::optional<RemoteOptions> from_env(std::string_view port);
};

// JSON-over-HTTP client with bounded exponential-backoff retries. Transport
// failures, 429 and 5xx are retried; 401/403 and other 4xx are not.
class WireClient {
 public:
  WireClient(RemoteOptions options, std::shared_ptr<CallRecorder> recorder);

  nlohmann::json post(std::string_view endpoint, const nlohmann::json& body,
                      std::string_view idempotency_key = {});
  nlohmann::json get(std::string_view endpoint);
  const RemoteOptions& options() const { return options_; }

 private:
  nlohmann::json call(std::string_view method, std::string_view endpoint,
                      const nlohmann::json* body,
                      std::string_view idempotency_key);

  RemoteOptions options_;
  std::shared_ptr<CallRecorder> recorder_;
};

class RemoteGenerator : public ImageGenerator {
 public:
  RemoteGenerator(std::shared_ptr<WireClient> client,
                  std::shared_ptr<ImageStore> store);
  std::vector<ImageRef> generate(const GenerationRequest& request) override;
  Health health() override;
  std::string identity() const override;

 private:
  void load_index();
  void append_index(const std::string& key, const std::vector<ImageRef>& refs);

  std::shared_ptr<WireClient> client_;
  std::shared_ptr<ImageStore> store_;
  std::mutex mu_;
  std::map<std::string, std::vector<ImageRef>> index_;
};

class RemoteReasoner : public Reasoner {
 public:
  explicit RemoteReasoner(std::shared_ptr<WireClient> client)
      : client_(std::move(client)) {}
  std::string chat(std::span<const ChatMessage> messages) override;
  Health health() override;
  std::string identity() const override;

 private:
  std::shared_ptr<WireClient> client_;
};

class RemoteTextEmbedder : public TextEmbedder {
 public:
  explicit RemoteTextEmbedder(std::shared_ptr<WireClient> client)
      : client_(std::move(client)) {}
  Health health() override;
  std::string identity() const override;

 protected:
  std::vector<Embedding> do_embed(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<WireClient> client_;
};

class RemoteImageEmbedder : public ImageEmbedder {
 public:
  RemoteImageEmbedder(std::shared_ptr<WireClient> client,
                      std::shared_ptr<ImageStore> store)
      : client_(std::move(client)), store_(std::move(store)) {}
  Health health() override;
  std::string identity() const override;

 protected:
  std::vector<Embedding> do_embed(
      std::span<const ImageRegion> regions) override;

 private:
  std::shared_ptr<WireClient> client_;
  std::shared_ptr<ImageStore> store_;
};

class RemoteDetector : public FaceDetector {
 public:
  RemoteDetector(std::shared_ptr<WireClient> client,
                 std::shared_ptr<ImageStore> store)
      : client_(std::move(client)), store_(std::move(store)) {}
  Detection detect(const ImageRef& image) override;
  Health health() override;
  std::string identity() const override;

 private:
  std::shared_ptr<WireClient> client_;
  std::shared_ptr<ImageStore> store_;
};

// Builds remote ports from the environment. Ports without a configured URL
// are left null.
BackendSet make_remote_backends(std::shared_ptr<ImageStore> store,
                                std::shared_ptr<CallRecorder> recorder);

// Serves a BackendSet over the wire protocol. Used as the reference stub for
// contract tests and by `fairprompt serve`.
class WireServer {
 public:
  struct Options {
    // When non-empty, requests must carry "Authorization: Bearer <key>".
    std::string api_key;
  };

  WireServer(BackendSet backends, Options options);
  ~WireServer();
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  // Binds to host:port (port 0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called.
  void listen(const std::string& host, int port);
  void stop();
  std::string url() const;

 private:
  void install_routes();

  BackendSet backends_;
  Options options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace fairprompt

#endif  // FAIRPROMPT_WIRE_H_
