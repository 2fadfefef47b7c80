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

#include "fairprompt/common.h"

#include <cstdlib>
#include <set>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

namespace fairprompt {
namespace {

using ::testing::ElementsAre;

TEST(CommonTest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CommonTest, Base64RoundTrip) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foo"), "Zm9v");
  for (const std::string& s : std::vector<std::string>{"", "a", "ab", "abc", "abcd", std::string("\0\x01\xff", 3)}) {
    EXPECT_EQ(base64_decode(base64_encode(s)), s);
  }
  EXPECT_THROW(base64_decode("abc"), Error);
}

TEST(CommonTest, SubstreamsAreStableAndDistinct) {
  EXPECT_EQ(substream_seed(7, "generation"), substream_seed(7, "generation"));
  EXPECT_NE(substream_seed(7, "generation"), substream_seed(7, "selection"));
  EXPECT_NE(substream_seed(7, "generation"), substream_seed(8, "generation"));
}

TEST(CommonTest, Uniform01InRange) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(CommonTest, TextHelpers) {
  EXPECT_EQ(to_lower("NuRSE"), "nurse");
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_THAT(word_tokens("A Female-nurse, 2 old!"),
              ElementsAre("a", "female", "nurse", "2", "old"));
  EXPECT_EQ(slugify("Software Engineer"), "software-engineer");
}

TEST(CommonTest, TimestampHonorsSourceDateEpoch) {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  EXPECT_EQ(current_timestamp(), "1970-01-01T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST(CommonTest, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) ASSERT_EQ(h, 1);
}

TEST(CommonTest, ParallelForRethrows) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 42) throw Error(ErrorCode::kIo, "boom");
                            }),
               Error);
}

TEST(CommonTest, RetryableCodes) {
  EXPECT_TRUE(Error(ErrorCode::kTransport, "x").retryable());
  EXPECT_TRUE(Error(ErrorCode::kRateLimited, "x").retryable());
  EXPECT_FALSE(Error(ErrorCode::kAuth, "x").retryable());
  EXPECT_FALSE(Error(ErrorCode::kMalformedResponse, "x").retryable());
}

}  // namespace
}  // namespace fairprompt
