/*
 * Copyright 2026 The recollab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "recollab/backends.hpp"

namespace recollab {

// Few-shot prompt asking an LLM which object the expression refers to, with
// the answer requested as a dictionary {"target": "<object>"}.
std::string build_extraction_prompt(std::string_view expression);

// Reads the target out of a dictionary-format answer; accepts single or
// double quotes. nullopt when the answer is not in that format.
std::optional<std::string> parse_extraction_response(std::string_view raw);

// Head noun of the first noun phrase: the last word before the first
// preposition, relative pronoun, verb or participle introducing a clause.
std::string heuristic_target(std::string_view expression);

class HeuristicTargetExtractor final : public TargetExtractor {
 public:
  TargetExtraction extract_target(const CallContext& ctx,
                                  std::string_view expression) override;
};

// LLM-backed extraction; falls back to the heuristic (and logs) when the
// reply is not a dictionary.
class TransportTargetExtractor final : public TargetExtractor {
 public:
  explicit TransportTargetExtractor(std::shared_ptr<Transport> transport,
                                    Json parameters = Json::object());
  TargetExtraction extract_target(const CallContext& ctx,
                                  std::string_view expression) override;

 private:
  std::shared_ptr<Transport> transport_;
  Json parameters_;
};

}  // namespace recollab
