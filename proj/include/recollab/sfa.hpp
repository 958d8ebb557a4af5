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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "recollab/backends.hpp"
#include "recollab/datamodel.hpp"
#include "recollab/prediction.hpp"

namespace recollab {

inline constexpr double kDefaultRouteThreshold = 0.2;
inline constexpr std::string_view kDefaultBasePrompt =
    "Where is <expr>? answer in [[x0, y0, x1, y1]] format.";
inline constexpr std::string_view kDefaultFocusSuffix = ", please focus on the <target>";

struct SfaConfig {
  double threshold = kDefaultRouteThreshold;
  // Target-focus matching on the fast pathway and the target-focus prompt on
  // the slow one.
  bool focus = true;
  // Bypass the router; None routes normally.
  enum class Force { None, Fast, Slow } force = Force::None;
  // "<expr>" and "<target>" are substituted.
  std::string base_prompt{kDefaultBasePrompt};
  std::string focus_suffix{kDefaultFocusSuffix};
};

// Fast exactly when one detection reaches `threshold`; zero or several go
// to the slow pathway.
RouteDecision route_from_detections(std::span<const Detection> dets,
                                    std::string_view target, double threshold);

RouteDecision assess_route(const CallContext& ctx, std::string_view target,
                           Detector& detector,
                           double threshold = kDefaultRouteThreshold);

std::string build_base_prompt(std::string_view expression, const SfaConfig& cfg = {});
// Base prompt with the focus suffix appended; unchanged when focus is off.
std::string build_focus_prompt(std::string_view expression, std::string_view target,
                               const SfaConfig& cfg = {});

// First case-insensitive occurrence of `target` in `query`, preferring a
// whole-word match.
std::optional<TokenSpan> find_target_span(std::string_view query, std::string_view target);

struct FocusSelection {
  std::size_t index = 0;
  // Max token score over the target span, or the overall score on fallback.
  double target_score = 0.0;
  bool fallback = false;
};

// Picks the proposal whose target-span tokens match best. Falls back to the
// highest overall score when the span is unknown or no proposal carries
// token scores over it. Throws std::invalid_argument on an empty result.
FocusSelection target_focus_select(const GroundingResult& g,
                                   const std::optional<TokenSpan>& target_span);

// Specialist-only baseline: ground the expression, keep the top proposal
// (or the target-focus pick).
Prediction run_specialist(const RecTask& task, const BackendBundle& backends,
                          const SfaConfig& cfg);
// MLLM-only baseline: generate coordinates from the (focus) prompt.
Prediction run_mllm(const RecTask& task, const BackendBundle& backends,
                    const SfaConfig& cfg);
Prediction run_sfa(const RecTask& task, const BackendBundle& backends,
                   const SfaConfig& cfg);

}  // namespace recollab
