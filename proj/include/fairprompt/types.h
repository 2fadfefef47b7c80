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

#ifndef FAIRPROMPT_TYPES_H_
#define FAIRPROMPT_TYPES_H_

#include <string>

namespace fairprompt {

// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const FaceBox&) const = default;
};

// Reference to an image held in an ImageStore. `id` is the SHA-256 of the
// image bytes; `extension` selects the on-disk file name.
struct ImageRef {
  std::string id;
  std::string extension;

  std::string file_name() const { return id + "." + extension; }
  bool operator==(const ImageRef&) const = default;
};

}  // namespace fairprompt

#endif  // FAIRPROMPT_TYPES_H_
