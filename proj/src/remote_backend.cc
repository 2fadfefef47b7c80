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

#include <cstdlib>
#include <fstream>
#include <regex>

#include "fairprompt/common.h"
#include "fairprompt/schema.h"
#include "fairprompt/wire.h"
#include "httplib.h"

namespace fairprompt {

using nlohmann::json;

// Protocol helpers -------------------------------------------------------------

namespace wire {

json error_envelope(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

json box_to_json(const FaceBox& b) {
  return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

FaceBox box_from_json(const json& j) {
  try {
    return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
            j.at("h").get<int>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("bad box: ") + e.what());
  }
}

json vectors_to_json(const std::vector<Embedding>& vectors) {
  json out = json::array();
  for (const auto& v : vectors) {
    out.push_back(std::vector<double>(v.values().begin(), v.values().end()));
  }
  return out;
}

std::vector<Embedding> vectors_from_json(const json& j, std::size_t expected) {
  std::vector<Embedding> out;
  try {
    const json& vs = j.at("vectors");
    if (!vs.is_array() || vs.size() != expected) {
      throw Error(ErrorCode::kMalformedResponse,
                  "expected " + std::to_string(expected) + " vectors");
    }
    for (const auto& v : vs) out.emplace_back(v.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("bad vectors: ") + e.what());
  }
  return out;
}

json image_payload(const ImageStore& store, const ImageRef& ref) {
  return {{"data", base64_encode(store.read(ref))}, {"format", ref.extension}};
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
    case ErrorCode::kConfig:
      return 400;
    case ErrorCode::kAuth: return 401;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kRateLimited: return 429;
    case ErrorCode::kCapability: return 501;
    case ErrorCode::kMalformedResponse: return 502;
    case ErrorCode::kTransport: return 503;
    default: return 500;
  }
}

}  // namespace wire

// Options ----------------------------------------------------------------------

std::optional<RemoteOptions> RemoteOptions::from_env(std::string_view port) {
  std::string var = "FAIRPROMPT_";
  for (char c : port) {
    var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  var += "_URL";
  const char* url = std::getenv(var.c_str());
  if (url == nullptr || *url == '\0') url = std::getenv("FAIRPROMPT_BACKEND_URL");
  if (url == nullptr || *url == '\0') return std::nullopt;
  RemoteOptions o;
  o.base_url = url;
  if (const char* key = std::getenv("FAIRPROMPT_API_KEY")) o.api_key = key;
  if (const char* r = std::getenv("FAIRPROMPT_MAX_RETRIES")) {
    o.max_retries = std::atoi(r);
  }
  return o;
}

// Client -----------------------------------------------------------------------

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // optional path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::kConfig, "invalid backend URL '" + url + "'",
                "FAIRPROMPT_BACKEND_URL");
  }
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

Error error_from_response(int status, const std::string& body) {
  std::string code = "http_" + std::to_string(status);
  std::string message = body.substr(0, 200);
  try {
    const json j = json::parse(body);
    code = j.at("error").at("code").get<std::string>();
    message = j.at("error").at("message").get<std::string>();
  } catch (const std::exception&) {
  }
  const std::string text = "HTTP " + std::to_string(status) + " [" + code +
                           "] " + message;
  if (status == 401 || status == 403) return Error(ErrorCode::kAuth, text);
  if (status == 429) return Error(ErrorCode::kRateLimited, text);
  if (status == 501) return Error(ErrorCode::kCapability, text);
  if (status >= 500) return Error(ErrorCode::kTransport, text);
  return Error(ErrorCode::kInvalidArgument, text);
}

}  // namespace

WireClient::WireClient(RemoteOptions options,
                       std::shared_ptr<CallRecorder> recorder)
    : options_(std::move(options)), recorder_(std::move(recorder)) {
  split_url(options_.base_url);
}

json WireClient::post(std::string_view endpoint, const json& body,
                      std::string_view idempotency_key) {
  return call("POST", endpoint, &body, idempotency_key);
}

json WireClient::get(std::string_view endpoint) {
  return call("GET", endpoint, nullptr, {});
}

json WireClient::call(std::string_view method, std::string_view endpoint,
                      const json* body, std::string_view idempotency_key) {
  const SplitUrl url = split_url(options_.base_url);
  const std::string path = url.prefix + std::string(endpoint);
  const std::string payload = body ? body->dump() : std::string();

  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  if (!idempotency_key.empty()) {
    headers.emplace(std::string(wire::kIdempotencyHeader),
                    std::string(idempotency_key));
  }

  CallRecord record;
  record.endpoint = std::string(endpoint);
  record.request_digest = sha256_hex(std::string(method) + " " + path + "\n" + payload);
  const auto started = std::chrono::steady_clock::now();
  auto finish = [&](bool ok, int status) {
    record.ok = ok;
    record.http_status = status;
    record.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    if (recorder_) recorder_->record(record);
  };

  for (int attempt = 0;; ++attempt) {
    record.retries = attempt;
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(options_.timeout);
    cli.set_write_timeout(options_.timeout);

    httplib::Result res =
        method == "GET"
            ? cli.Get(path, headers)
            : cli.Post(path, headers, payload, "application/json");

    std::optional<Error> failure;
    if (!res) {
      failure = Error(ErrorCode::kTransport,
                      "request to " + path + " failed: " +
                          httplib::to_string(res.error()));
    } else if (res->status >= 200 && res->status < 300) {
      try {
        json out = json::parse(res->body);
        finish(true, res->status);
        return out;
      } catch (const json::parse_error&) {
        finish(false, res->status);
        throw Error(ErrorCode::kMalformedResponse,
                    "response from " + path + " is not valid JSON");
      }
    } else {
      failure = error_from_response(res->status, res->body);
    }

    if (!failure->retryable() || attempt >= options_.max_retries) {
      finish(false, res ? res->status : 0);
      throw *failure;
    }
    auto delay = options_.backoff_base * (1LL << std::min(attempt, 20));
    if (delay > options_.backoff_max) delay = options_.backoff_max;
    std::this_thread::sleep_for(delay);
  }
}

// Ports ------------------------------------------------------------------------

namespace {

Health remote_health(WireClient& client) {
  Health h;
  h.identity = client.options().base_url;
  try {
    const json j = client.get(wire::kHealth);
    h.ok = j.value("status", "") == "ok";
    h.embedding_dim = j.value("embedding_dim", 0);
    h.detail = j.dump();
  } catch (const Error& e) {
    h.detail = e.what();
  }
  return h;
}

}  // namespace

RemoteGenerator::RemoteGenerator(std::shared_ptr<WireClient> client,
                                 std::shared_ptr<ImageStore> store)
    : client_(std::move(client)), store_(std::move(store)) {
  load_index();
}

void RemoteGenerator::load_index() {
  if (!store_->directory()) return;
  const auto path = *store_->directory() / "index.jsonl";
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<ImageRef> refs;
      for (const auto& r : j.at("images")) {
        refs.push_back({r.at("id").get<std::string>(),
                        r.at("format").get<std::string>()});
      }
      index_[j.at("key").get<std::string>()] = std::move(refs);
    } catch (const std::exception&) {
      // A torn final line from an interrupted run is ignored.
    }
  }
}

void RemoteGenerator::append_index(const std::string& key,
                                   const std::vector<ImageRef>& refs) {
  index_[key] = refs;
  if (!store_->directory()) return;
  json images = json::array();
  for (const auto& r : refs) images.push_back({{"id", r.id}, {"format", r.extension}});
  std::ofstream out(*store_->directory() / "index.jsonl", std::ios::app);
  out << json{{"key", key}, {"images", std::move(images)}}.dump() << "\n";
  out.flush();
}

std::vector<ImageRef> RemoteGenerator::generate(const GenerationRequest& request) {
  if (!request.idempotency_key.empty()) {
    std::lock_guard lock(mu_);
    auto it = index_.find(request.idempotency_key);
    if (it != index_.end()) {
      bool complete = true;
      for (const auto& r : it->second) complete = complete && store_->contains(r);
      if (complete) return it->second;
    }
  }
  const json body = {{"prompt", request.prompt},
                     {"context", request.context},
                     {"count", request.count}};
  const json resp = client_->post(wire::kGenerate, body, request.idempotency_key);
  std::vector<ImageRef> refs;
  try {
    const json& images = resp.at("images");
    if (!images.is_array() ||
        images.size() != static_cast<std::size_t>(request.count)) {
      throw Error(ErrorCode::kMalformedResponse,
                  "expected " + std::to_string(request.count) + " images");
    }
    for (const auto& img : images) {
      refs.push_back(store_->put(base64_decode(img.at("data").get<std::string>()),
                                 img.value("format", "png")));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("bad /generate response: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) {
      throw Error(ErrorCode::kMalformedResponse, e.what());
    }
    throw;
  }
  if (!request.idempotency_key.empty()) {
    std::lock_guard lock(mu_);
    append_index(request.idempotency_key, refs);
  }
  return refs;
}

Health RemoteGenerator::health() { return remote_health(*client_); }
std::string RemoteGenerator::identity() const {
  return "remote:" + client_->options().base_url;
}

std::string RemoteReasoner::chat(std::span<const ChatMessage> messages) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  const json resp = client_->post(wire::kChat, {{"messages", std::move(msgs)}});
  auto it = resp.find("text");
  if (it == resp.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedResponse, "bad /chat response: no text");
  }
  return it->get<std::string>();
}
Health RemoteReasoner::health() { return remote_health(*client_); }
std::string RemoteReasoner::identity() const {
  return "remote:" + client_->options().base_url;
}

std::vector<Embedding> RemoteTextEmbedder::do_embed(
    std::span<const std::string> texts) {
  const std::size_t batch = std::max<std::size_t>(1, client_->options().batch_size);
  const std::size_t batches = (texts.size() + batch - 1) / batch;
  std::vector<std::vector<Embedding>> parts(batches);
  parallel_for(batches, client_->options().concurrency, [&](std::size_t b) {
    const std::size_t lo = b * batch;
    const std::size_t hi = std::min(texts.size(), lo + batch);
    json list = json::array();
    for (std::size_t i = lo; i < hi; ++i) list.push_back(texts[i]);
    parts[b] = wire::vectors_from_json(
        client_->post(wire::kEmbedText, {{"texts", std::move(list)}}), hi - lo);
  });
  std::vector<Embedding> out;
  for (auto& p : parts) {
    for (auto& v : p) out.push_back(std::move(v));
  }
  return out;
}
Health RemoteTextEmbedder::health() { return remote_health(*client_); }
std::string RemoteTextEmbedder::identity() const {
  return "remote:" + client_->options().base_url;
}

std::vector<Embedding> RemoteImageEmbedder::do_embed(
    std::span<const ImageRegion> regions) {
  const std::size_t batch = std::max<std::size_t>(1, client_->options().batch_size);
  const std::size_t batches = (regions.size() + batch - 1) / batch;
  std::vector<std::vector<Embedding>> parts(batches);
  parallel_for(batches, client_->options().concurrency, [&](std::size_t b) {
    const std::size_t lo = b * batch;
    const std::size_t hi = std::min(regions.size(), lo + batch);
    json list = json::array();
    for (std::size_t i = lo; i < hi; ++i) {
      json item = wire::image_payload(*store_, regions[i].image);
      item["crop"] = regions[i].crop ? wire::box_to_json(*regions[i].crop)
                                     : json(nullptr);
      list.push_back(std::move(item));
    }
    parts[b] = wire::vectors_from_json(
        client_->post(wire::kEmbedImage, {{"images", std::move(list)}}), hi - lo);
  });
  std::vector<Embedding> out;
  for (auto& p : parts) {
    for (auto& v : p) out.push_back(std::move(v));
  }
  return out;
}
Health RemoteImageEmbedder::health() { return remote_health(*client_); }
std::string RemoteImageEmbedder::identity() const {
  return "remote:" + client_->options().base_url;
}

Detection RemoteDetector::detect(const ImageRef& image) {
  const json resp = client_->post(
      wire::kDetect, {{"image", wire::image_payload(*store_, image)}});
  Detection d;
  try {
    d.image_width = resp.at("width").get<int>();
    d.image_height = resp.at("height").get<int>();
    for (const auto& b : resp.at("boxes")) d.boxes.push_back(wire::box_from_json(b));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("bad /detect response: ") + e.what());
  }
  return d;
}
Health RemoteDetector::health() { return remote_health(*client_); }
std::string RemoteDetector::identity() const {
  return "remote:" + client_->options().base_url;
}

BackendSet make_remote_backends(std::shared_ptr<ImageStore> store,
                                std::shared_ptr<CallRecorder> recorder) {
  if (!store) store = std::make_shared<ImageStore>();
  BackendSet set;
  set.store = store;
  auto client_for = [&](std::string_view port) -> std::shared_ptr<WireClient> {
    auto opts = RemoteOptions::from_env(port);
    if (!opts) return nullptr;
    return std::make_shared<WireClient>(*opts, recorder);
  };
  if (auto c = client_for("generator")) {
    set.generator = std::make_shared<RemoteGenerator>(c, store);
  }
  if (auto c = client_for("reasoner")) {
    set.reasoner = std::make_shared<RemoteReasoner>(c);
  }
  if (auto c = client_for("embedder")) {
    set.text_embedder = std::make_shared<RemoteTextEmbedder>(c);
    set.image_embedder = std::make_shared<RemoteImageEmbedder>(c, store);
  }
  if (auto c = client_for("detector")) {
    set.detector = std::make_shared<RemoteDetector>(c, store);
  }
  return set;
}

// Server -----------------------------------------------------------------------

WireServer::WireServer(BackendSet backends, Options options)
    : backends_(std::move(backends)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  if (!backends_.store) backends_.store = std::make_shared<ImageStore>();
  install_routes();
}

WireServer::~WireServer() { stop(); }

namespace {

void reply_error(httplib::Response& res, ErrorCode code,
                 const std::string& message) {
  res.status = wire::http_status_for(code);
  res.set_content(wire::error_envelope(error_code_name(code), message).dump(),
                  "application/json");
}

ImageRef store_payload(ImageStore& store, const json& j) {
  return store.put(base64_decode(j.at("data").get<std::string>()),
                   j.value("format", "png"));
}

}  // namespace

void WireServer::install_routes() {
  auto& srv = *server_;
  srv.set_pre_routing_handler(
      [this](const httplib::Request& req, httplib::Response& res) {
        if (options_.api_key.empty()) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + options_.api_key) {
          return httplib::Server::HandlerResponse::Unhandled;
        }
        reply_error(res, ErrorCode::kAuth, "missing or invalid credentials");
        return httplib::Server::HandlerResponse::Handled;
      });

  using Handler = std::function<json(const json&)>;
  auto route = [this, &srv](std::string_view path, Handler handler) {
    srv.Post(std::string(path),
             [handler](const httplib::Request& req, httplib::Response& res) {
               try {
                 const json body = json::parse(req.body);
                 res.set_content(handler(body).dump(), "application/json");
               } catch (const json::exception& e) {
                 reply_error(res, ErrorCode::kInvalidArgument,
                             std::string("bad request: ") + e.what());
               } catch (const Error& e) {
                 reply_error(res, e.code(), e.what());
               } catch (const std::exception& e) {
                 reply_error(res, ErrorCode::kAborted, e.what());
               }
             });
  };

  route(wire::kGenerate, [this](const json& body) {
    auto& gen = require_port(backends_.generator, "generator");
    GenerationRequest r{body.at("prompt").get<std::string>(),
                        body.value("context", ""), body.at("count").get<int>(), ""};
    json images = json::array();
    for (const auto& ref : gen.generate(r)) {
      images.push_back(wire::image_payload(*backends_.store, ref));
    }
    return json{{"images", std::move(images)}};
  });
  route(wire::kChat, [this](const json& body) {
    auto& reasoner = require_port(backends_.reasoner, "reasoner");
    std::vector<ChatMessage> msgs;
    for (const auto& m : body.at("messages")) {
      msgs.push_back({m.at("role").get<std::string>(),
                      m.at("content").get<std::string>()});
    }
    return json{{"text", reasoner.chat(msgs)}};
  });
  route(wire::kEmbedText, [this](const json& body) {
    auto& emb = require_port(backends_.text_embedder, "text embedder");
    const auto texts = body.at("texts").get<std::vector<std::string>>();
    const auto vs = emb.embed(texts);
    return json{{"dim", vs.empty() ? 0 : vs.front().dim()},
                {"vectors", wire::vectors_to_json(vs)}};
  });
  route(wire::kEmbedImage, [this](const json& body) {
    auto& emb = require_port(backends_.image_embedder, "image embedder");
    std::vector<ImageRegion> regions;
    for (const auto& item : body.at("images")) {
      ImageRegion r{store_payload(*backends_.store, item), std::nullopt};
      if (auto c = item.find("crop"); c != item.end() && !c->is_null()) {
        r.crop = wire::box_from_json(*c);
      }
      regions.push_back(std::move(r));
    }
    const auto vs = emb.embed(regions);
    return json{{"dim", vs.empty() ? 0 : vs.front().dim()},
                {"vectors", wire::vectors_to_json(vs)}};
  });
  route(wire::kDetect, [this](const json& body) {
    auto& det = require_port(backends_.detector, "detector");
    const Detection d = det.detect(store_payload(*backends_.store, body.at("image")));
    json boxes = json::array();
    for (const auto& b : d.boxes) boxes.push_back(wire::box_to_json(b));
    return json{{"width", d.image_width},
                {"height", d.image_height},
                {"boxes", std::move(boxes)}};
  });
  srv.Get(std::string(wire::kHealth),
          [this](const httplib::Request&, httplib::Response& res) {
            int dim = 0;
            if (backends_.text_embedder) {
              dim = backends_.text_embedder->health().embedding_dim;
            }
            res.set_content(json{{"status", "ok"},
                                 {"models", backends_.identities()},
                                 {"embedding_dim", dim}}
                                .dump(),
                            "application/json");
          });
}

int WireServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : port;
  if (port != 0 && !server_->bind_to_port(host, port)) port_ = -1;
  if (port_ < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void WireServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void WireServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string WireServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace fairprompt
