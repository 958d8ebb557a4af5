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

#include "recollab/target.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace recollab {

namespace {

struct Shot {
  std::string_view expression;
  std::string_view target;
};

constexpr Shot kShots[] = {
    {"the man in a red shirt holding an umbrella", "man"},
    {"the cup on the left of the silver laptop", "cup"},
    {"a white dog lying next to the sofa", "dog"},
};

// Words that end the first noun phrase.
const std::unordered_set<std::string>& phrase_breakers() {
  static const std::unordered_set<std::string> words{
      "of", "in", "on", "at", "to", "with", "without", "near", "by", "behind",
      "beside", "besides", "between", "under", "below", "above", "over", "beneath",
      "inside", "outside", "from", "for", "into", "onto", "against", "along", "across",
      "around", "through", "next", "left", "right", "front", "back", "top", "bottom",
      "that", "which", "who", "whom", "whose", "where", "is", "are", "was", "were",
      "has", "have", "and", "or", "but", "while", "as", "than", "closest", "nearest",
      "farthest", "furthest", "leftmost", "rightmost", "wearing", "holding"};
  return words;
}

const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> words{
      "a", "an", "the", "this", "that", "these", "those", "some", "one", "two",
      "three", "any", "its", "his", "her", "their", "my", "our"};
  return words;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0 || c == '-' || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
      if (c == ',' || c == ';' || c == ':' || c == '.') words.emplace_back(",");
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() > suffix.size() + 2 &&
         std::string_view(w).substr(w.size() - suffix.size()) == suffix;
}

}  // namespace

std::string build_extraction_prompt(std::string_view expression) {
  std::string p =
      "Which object does the given expression refer to? Answer with a dictionary "
      "of the form {\"target\": \"<object>\"} and nothing else.\n\n";
  for (const auto& shot : kShots) {
    p += "Expression: ";
    p += shot.expression;
    p += "\nAnswer: {\"target\": \"";
    p += shot.target;
    p += "\"}\n\n";
  }
  p += "Expression: ";
  p += expression;
  p += "\nAnswer:";
  return p;
}

std::optional<std::string> parse_extraction_response(std::string_view raw) {
  static const std::regex kDict(R"(\{\s*["']target["']\s*:\s*["']([^"']*)["']\s*\})");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(raw.begin(), raw.end(), m, kDict)) return std::nullopt;
  std::string target = m[1].str();
  const auto b = target.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  const auto e = target.find_last_not_of(" \t");
  return target.substr(b, e - b + 1);
}

std::string heuristic_target(std::string_view expression) {
  const auto words = words_of(expression);
  std::string head;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    if (w == ",") {
      if (!head.empty()) break;
      continue;
    }
    if (determiners().contains(w)) {
      if (!head.empty()) break;
      continue;
    }
    if (phrase_breakers().contains(w)) {
      if (!head.empty()) break;
      continue;
    }
    // A participle followed by a preposition or determiner opens a clause:
    // "positioned to", "standing next", "sitting on".
    if ((ends_with(w, "ing") || ends_with(w, "ed")) && !head.empty() && i + 1 < words.size() &&
        (phrase_breakers().contains(words[i + 1]) || determiners().contains(words[i + 1]))) {
      break;
    }
    head = w;
  }
  if (head.empty()) {
    // Nothing but function words; fall back to the last word.
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
      if (*it != ",") return *it;
    }
  }
  return head;
}

TargetExtraction HeuristicTargetExtractor::extract_target(const CallContext&,
                                                          std::string_view expression) {
  if (expression.empty()) throw std::invalid_argument("extract_target: empty expression");
  return TargetExtraction{heuristic_target(expression), false, {}};
}

TransportTargetExtractor::TransportTargetExtractor(std::shared_ptr<Transport> transport,
                                                   Json parameters)
    : transport_(std::move(transport)), parameters_(std::move(parameters)) {}

TargetExtraction TransportTargetExtractor::extract_target(const CallContext& ctx,
                                                          std::string_view expression) {
  if (expression.empty()) throw std::invalid_argument("extract_target: empty expression");
  Json req = Json::object();
  req["image"] = ctx.image;
  req["prompt"] = build_extraction_prompt(expression);
  req["parameters"] = parameters_;
  const Json resp = transport_->call(ctx, req);
  raise_if_error(Role::Extractor, ctx, resp);
  TargetExtraction out;
  out.raw_text = resp.value("text", "");
  if (auto target = parse_extraction_response(out.raw_text)) {
    out.target = *target;
    return out;
  }
  spdlog::warn("extractor task {}: reply not in dictionary format, using heuristic", ctx.task_id);
  out.target = heuristic_target(expression);
  out.used_fallback = true;
  return out;
}

}  // namespace recollab
