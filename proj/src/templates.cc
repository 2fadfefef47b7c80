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

#include "fairprompt/templates.h"

#include <regex>
#include <sstream>

#include "fairprompt/common.h"

namespace fairprompt {

std::string cot_generation_opening(std::string_view profession,
                                   std::string_view cot0, int image_count) {
  std::string out(kProfessionPrefix);
  out += profession;
  out += "\n";
  out += cot0;
  out += "\nTask: " + initial_prompt(profession, image_count) + ".";
  return out;
}

std::string initial_prompt(std::string_view profession, int image_count) {
  return std::to_string(image_count) + " photos of " +
         to_lower(trim(profession));
}

std::string adaptation_request(std::string_view archived_profession,
                               std::string_view archived_cot,
                               std::string_view new_profession) {
  std::string out = "Consider this chain of thought for ";
  out += archived_profession;
  out += ": \"";
  out += archived_cot;
  out += "\"\n";
  out += kAdaptMarker;
  out += " ";
  out += new_profession;
  out += ".";
  return out;
}

std::string prompt_list_request(int n) {
  const std::string count = std::to_string(n);
  return "Can you use it to generate " + count + " " +
         std::string(kPromptListMarker) + " " + count +
         " images (1 image per prompt) following these guidelines? Reply with "
         "a fenced block containing a numbered list, one prompt per line.";
}

std::vector<std::string> parse_numbered_list(std::string_view text) {
  static const std::regex kItem(R"(^\s*(\d+)\s*[.)]\s+(.*\S)\s*$)");
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  auto numbered = [&](std::size_t begin, std::size_t end) {
    std::vector<std::string> out;
    std::smatch m;
    for (std::size_t i = begin; i < end; ++i) {
      if (std::regex_match(lines[i], m, kItem)) out.push_back(m[2].str());
    }
    return out;
  };

  std::size_t open = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).starts_with("```")) {
      open = i;
      break;
    }
  }
  if (open < lines.size()) {
    std::size_t close = lines.size();
    for (std::size_t i = open + 1; i < lines.size(); ++i) {
      if (trim(lines[i]).starts_with("```")) {
        close = i;
        break;
      }
    }
    auto items = numbered(open + 1, close);
    if (!items.empty()) return items;
  }
  return numbered(0, lines.size());
}

}  // namespace fairprompt
