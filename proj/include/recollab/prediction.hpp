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
#include <string>
#include <string_view>
#include <vector>

#include "recollab/datamodel.hpp"
#include "recollab/geometry.hpp"

namespace recollab {

enum class Pathway { Fast, Slow, Crs };
enum class RouteLevel { Fast, Slow };

std::string_view to_string(Pathway p);
std::string_view to_string(RouteLevel l);

struct RouteDecision {
  RouteLevel level = RouteLevel::Slow;
  std::size_t detection_count = 0;  // detections at or above the threshold
  std::string target;
  double threshold_used = 0.2;

  friend bool operator==(const RouteDecision&, const RouteDecision&) = default;
};

struct ScoredBox {
  BBox box;
  double confidence = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

// One pipeline answer for one task. A missing box with confidence 0 is a
// rejection (or a miss when `error` is set).
struct Prediction {
  std::string task_id;
  std::optional<BBox> box;
  double confidence = 0.0;
  // Absent when the task failed before a pathway was chosen.
  std::optional<Pathway> pathway;
  std::optional<RouteDecision> decision;
  // Boxes the pipeline offers, best first, confidences non-increasing.
  std::vector<ScoredBox> ranked;
  std::string raw;
  std::optional<std::string> error;
  std::vector<std::string> notes;
  double cost_units = 0.0;

  bool rejected() const { return !box.has_value() && !error.has_value(); }
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Prediction-log record codec (one JSON object per line).
Json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j);

}  // namespace recollab
