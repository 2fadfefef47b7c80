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

#ifndef FAIRPROMPT_COMMON_H_
#define FAIRPROMPT_COMMON_H_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fairprompt {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

enum class ErrorCode {
  kInvalidArgument,
  kConfig,
  kParse,
  kIo,
  kTransport,
  kAuth,
  kRateLimited,
  kMalformedResponse,
  kCapability,
  kAborted,
  kNotFound,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library. `key_path` names the offending
// config key or input element when there is one; `detail` carries raw
// payloads (e.g. an unparseable reasoner response) for the manifest.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string key_path = {},
        std::string detail = {});

  ErrorCode code() const { return code_; }
  const std::string& key_path() const { return key_path_; }
  const std::string& detail() const { return detail_; }
  bool retryable() const {
    return code_ == ErrorCode::kTransport || code_ == ErrorCode::kRateLimited;
  }

 private:
  ErrorCode code_;
  std::string key_path_;
  std::string detail_;
};

// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// Derives an independent 64-bit seed for the named substream of `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

// Uniform double in [0, 1) from the top 53 bits; stable across standard
// library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Lower-cased alphanumeric tokens of `text`.
std::vector<std::string> word_tokens(std::string_view text);
std::string slugify(std::string_view s);

// ISO-8601 UTC timestamp. Honors SOURCE_DATE_EPOCH so that runs can be
// reproduced byte-for-byte.
std::string current_timestamp();

// Runs fn(i) for i in [0, n) on up to `max_workers` threads. Results must be
// written by index; the first exception is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t max_workers, Fn&& fn) {
  if (n == 0) return;
  std::size_t workers = std::min(n, std::max<std::size_t>(1, max_workers));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fairprompt

#endif  // FAIRPROMPT_COMMON_H_
