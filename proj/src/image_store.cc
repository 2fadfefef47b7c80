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

#include <fstream>

#include "fairprompt/backends.h"
#include "fairprompt/common.h"
#include "fairprompt/schema.h"

namespace fairprompt {

ImageStore::ImageStore(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {
  if (directory_) std::filesystem::create_directories(*directory_);
}

ImageRef ImageStore::put(std::string bytes, std::string_view extension) {
  ImageRef ref{sha256_hex(bytes), std::string(extension)};
  std::lock_guard lock(mu_);
  if (directory_) {
    const auto path = *directory_ / ref.file_name();
    if (!std::filesystem::exists(path)) {
      const auto tmp = *directory_ / (ref.file_name() + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIo, "cannot write image", tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      }
      std::filesystem::rename(tmp, path);
    }
  }
  bytes_.try_emplace(ref.id, std::move(bytes));
  return ref;
}

std::string ImageStore::read(const ImageRef& ref) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = bytes_.find(ref.id); it != bytes_.end()) return it->second;
  }
  if (directory_) {
    const auto path = *directory_ / ref.file_name();
    if (std::filesystem::exists(path)) return read_text_file(path);
  }
  throw Error(ErrorCode::kNotFound, "image not in store", ref.file_name());
}

bool ImageStore::contains(const ImageRef& ref) const {
  {
    std::lock_guard lock(mu_);
    if (bytes_.contains(ref.id)) return true;
  }
  return directory_ && std::filesystem::exists(*directory_ / ref.file_name());
}

}  // namespace fairprompt
