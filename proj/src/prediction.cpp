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

#include "recollab/prediction.hpp"

#include <stdexcept>

namespace recollab {

std::string_view to_string(Pathway p) {
  switch (p) {
    case Pathway::Fast: return "fast";
    case Pathway::Slow: return "slow";
    case Pathway::Crs: return "crs";
  }
  return "?";
}

std::string_view to_string(RouteLevel l) { return l == RouteLevel::Fast ? "fast" : "slow"; }

Json prediction_to_json(const Prediction& p) {
  Json j = Json::object();
  j["task_id"] = p.task_id;
  j["pathway"] = p.pathway ? Json(std::string(to_string(*p.pathway))) : Json();
  j["box"] = p.box ? box_to_json(*p.box) : Json();
  j["confidence"] = p.confidence;
  j["ranked"] = Json::array();
  for (const auto& r : p.ranked) {
    j["ranked"].push_back(Json{{"box", box_to_json(r.box)}, {"confidence", r.confidence}});
  }
  if (p.decision) {
    j["decision"] = Json{{"level", std::string(to_string(p.decision->level))},
                         {"detection_count", p.decision->detection_count},
                         {"target", p.decision->target},
                         {"threshold", p.decision->threshold_used}};
  } else {
    j["decision"] = Json();
  }
  j["raw"] = p.raw;
  j["error"] = p.error ? Json(*p.error) : Json();
  j["notes"] = p.notes;
  j["cost_units"] = p.cost_units;
  return j;
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  p.task_id = j.at("task_id").get<std::string>();
  if (const auto& pw = j.at("pathway"); !pw.is_null()) {
    const auto s = pw.get<std::string>();
    if (s == "fast") p.pathway = Pathway::Fast;
    else if (s == "slow") p.pathway = Pathway::Slow;
    else if (s == "crs") p.pathway = Pathway::Crs;
    else throw std::invalid_argument("unknown pathway '" + s + "'");
  }
  if (const auto& b = j.at("box"); !b.is_null()) p.box = box_from_json(b);
  p.confidence = j.at("confidence").get<double>();
  for (const auto& r : j.at("ranked")) {
    p.ranked.push_back(ScoredBox{box_from_json(r.at("box")), r.at("confidence").get<double>()});
  }
  if (const auto& d = j.at("decision"); !d.is_null()) {
    RouteDecision rd;
    rd.level = d.at("level").get<std::string>() == "fast" ? RouteLevel::Fast : RouteLevel::Slow;
    rd.detection_count = d.at("detection_count").get<std::size_t>();
    rd.target = d.at("target").get<std::string>();
    rd.threshold_used = d.at("threshold").get<double>();
    p.decision = rd;
  }
  p.raw = j.at("raw").get<std::string>();
  if (const auto& e = j.at("error"); !e.is_null()) p.error = e.get<std::string>();
  p.notes = j.value("notes", std::vector<std::string>{});
  p.cost_units = j.value("cost_units", 0.0);
  return p;
}

}  // namespace recollab
