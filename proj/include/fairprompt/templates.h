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

#ifndef FAIRPROMPT_TEMPLATES_H_
#define FAIRPROMPT_TEMPLATES_H_

#include <string>
#include <string_view>
#include <vector>

namespace fairprompt {

// Message templates sent to the reasoner port. The simulated reasoner keys
// off the marker phrases, so changing them changes its behavior.

// First user turn of a CoT-generation conversation.
std::string cot_generation_opening(std::string_view profession,
                                   std::string_view cot0, int image_count);

// Prompt used for image generation when no reasoner-derived prompt exists.
std::string initial_prompt(std::string_view profession, int image_count);

inline constexpr std::string_view kAdaptMarker =
    "Inspired by it, generate a similar chain of thought for";
inline constexpr std::string_view kPromptListMarker =
    "prompts that will be used to generate";
inline constexpr std::string_view kProfessionPrefix = "Profession: ";

std::string adaptation_request(std::string_view archived_profession,
                               std::string_view archived_cot,
                               std::string_view new_profession);
std::string prompt_list_request(int n);

// Parses a numbered prompt list. A fenced block is preferred; otherwise any
// line starting with "N." or "N)" is taken as an item.
std::vector<std::string> parse_numbered_list(std::string_view text);

}  // namespace fairprompt

#endif  // FAIRPROMPT_TEMPLATES_H_
