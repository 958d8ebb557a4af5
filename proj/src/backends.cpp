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

#include "recollab/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>
#include <semaphore>

#include "recollab/http_transport.hpp"
#include "recollab/replay.hpp"
#include "recollab/target.hpp"

namespace recollab {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Detector: return "detector";
    case Role::Grounder: return "grounder";
    case Role::Mllm: return "mllm";
    case Role::Selector: return "selector";
    case Role::Extractor: return "extractor";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view s) {
  for (Role r : kAllRoles) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::Transport: return "transport";
    case BackendErrorKind::Timeout: return "timeout";
    case BackendErrorKind::Payload: return "payload";
    case BackendErrorKind::FixtureMiss: return "fixture_miss";
    case BackendErrorKind::Config: return "config";
  }
  return "?";
}

BackendError::BackendError(Role role, BackendErrorKind kind, std::string task_id,
                           const std::string& message)
    : std::runtime_error(std::string(to_string(role)) + " " +
                         std::string(to_string(kind)) + " error on task '" +
                         task_id + "': " + message),
      role_(role),
      kind_(kind),
      task_id_(std::move(task_id)) {}

namespace {

void require_size(const CoordinateFrame& frame, const CallContext& ctx, Role role) {
  if (frame.normalized() && !ctx.image_size) {
    throw BackendError(role, BackendErrorKind::Config, ctx.task_id,
                       "normalized coordinates need the task's image_size");
  }
}

BBox make_box_or_payload_error(Role role, const CallContext& ctx, double x0,
                               double y0, double x1, double y1) {
  auto box = BBox::try_make(x0, y0, x1, y1);
  if (!box) {
    throw BackendError(role, BackendErrorKind::Payload, ctx.task_id,
                       "invalid box in response");
  }
  return *box;
}

}  // namespace

BBox frame_to_pixels(const BBox& raw, const CoordinateFrame& frame,
                     const CallContext& ctx, Role role) {
  if (!frame.normalized()) return raw;
  require_size(frame, ctx, role);
  const double sx = ctx.image_size->width / frame.scale;
  const double sy = ctx.image_size->height / frame.scale;
  return BBox(raw.x0() * sx, raw.y0() * sy, raw.x1() * sx, raw.y1() * sy);
}

BBox pixels_to_frame(const BBox& px, const CoordinateFrame& frame,
                     const CallContext& ctx, Role role) {
  if (!frame.normalized()) return px;
  require_size(frame, ctx, role);
  const double sx = frame.scale / ctx.image_size->width;
  const double sy = frame.scale / ctx.image_size->height;
  return BBox(px.x0() * sx, px.y0() * sy, px.x1() * sx, px.y1() * sy);
}

GenerativeGrounding parse_box_answer(std::string_view text) {
  static const std::regex kBoxPattern(
      R"(\[\[\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*,\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*,\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*,\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\]\])");
  GenerativeGrounding g;
  g.raw_text = std::string(text);
  std::smatch m;
  if (!std::regex_search(g.raw_text, m, kBoxPattern)) return g;
  const double x0 = std::stod(m[1].str());
  const double y0 = std::stod(m[2].str());
  const double x1 = std::stod(m[3].str());
  const double y1 = std::stod(m[4].str());
  g.box = BBox::try_make(x0, y0, x1, y1);
  g.malformed = !g.box.has_value();
  return g;
}

std::optional<double> derive_confidence(const GenerativeGrounding& g) {
  if (!g.box || g.coordinate_token_probs.empty()) return std::nullopt;
  double log_sum = 0.0;
  for (double p : g.coordinate_token_probs) {
    if (!(p > 0.0)) return 0.0;
    log_sum += std::log(std::min(p, 1.0));
  }
  const double mean = log_sum / static_cast<double>(g.coordinate_token_probs.size());
  return std::clamp(std::exp(mean), 0.0, 1.0);
}

std::optional<std::string> resolve_choice(std::string_view raw,
                                          std::span<const std::string> labels) {
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return std::nullopt;
  const auto last = raw.find_last_not_of(" \t\r\n");
  const std::string_view trimmed = raw.substr(first, last - first + 1);
  for (const auto& l : labels) {
    if (trimmed == l) return l;
  }
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (std::isalpha(static_cast<unsigned char>(c)) == 0) continue;
    if (i > 0 && word_char(raw[i - 1])) continue;
    if (i + 1 < raw.size() && word_char(raw[i + 1])) continue;
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& l : labels) {
      if (l.size() == 1 && l[0] == up) return l;
    }
  }
  return std::nullopt;
}

std::string request_key_text(const Json& request) {
  if (auto it = request.find("query"); it != request.end() && it->is_string()) {
    return it->get<std::string>();
  }
  if (auto it = request.find("prompt"); it != request.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return {};
}

void raise_if_error(Role role, const CallContext& ctx, const Json& response) {
  if (!response.is_object()) {
    throw BackendError(role, BackendErrorKind::Payload, ctx.task_id,
                       "response is not a JSON object");
  }
  auto it = response.find("error");
  if (it == response.end() || it->is_null()) return;
  BackendErrorKind kind = BackendErrorKind::Payload;
  std::string message = it->dump();
  if (it->is_object()) {
    const std::string k = it->value("kind", "payload");
    if (k == "timeout") kind = BackendErrorKind::Timeout;
    if (k == "transport") kind = BackendErrorKind::Transport;
    message = it->value("message", message);
  } else if (it->is_string()) {
    message = it->get<std::string>();
  }
  throw BackendError(role, kind, ctx.task_id, message);
}

std::vector<Detection> decode_detections(Role role, const CallContext& ctx,
                                         const Json& response,
                                         const CoordinateFrame& frame,
                                         std::size_t query_length) {
  raise_if_error(role, ctx, response);
  auto it = response.find("detections");
  if (it == response.end() || !it->is_array()) {
    throw BackendError(role, BackendErrorKind::Payload, ctx.task_id,
                       "missing 'detections' array");
  }
  std::vector<Detection> dets;
  dets.reserve(it->size());
  try {
    for (const auto& d : *it) {
      const auto& b = d.at("box");
      if (!b.is_array() || b.size() != 4) {
        throw BackendError(role, BackendErrorKind::Payload, ctx.task_id,
                           "box must have 4 coordinates");
      }
      Detection det;
      det.box = frame_to_pixels(
          make_box_or_payload_error(role, ctx, b[0].get<double>(), b[1].get<double>(),
                                    b[2].get<double>(), b[3].get<double>()),
          frame, ctx, role);
      det.score = d.at("score").get<double>();
      if (auto c = d.find("category"); c != d.end() && c->is_string()) {
        det.category = c->get<std::string>();
      }
      if (auto ts = d.find("token_scores"); ts != d.end() && ts->is_array()) {
        for (const auto& t : *ts) {
          const auto& span = t.at("span");
          det.token_scores.push_back(TokenScore{
              TokenSpan{span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()},
              t.at("score").get<double>()});
        }
      }
      validate_detection(det, query_length);
      dets.push_back(std::move(det));
    }
  } catch (const Json::exception& e) {
    throw BackendError(role, BackendErrorKind::Payload, ctx.task_id, e.what());
  } catch (const std::invalid_argument& e) {
    throw BackendError(role, BackendErrorKind::Payload, ctx.task_id, e.what());
  }
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return a.score > b.score;
  });
  return dets;
}

namespace {

Json base_request(const CallContext& ctx, const char* text_field,
                  std::string_view text, const Json& parameters) {
  Json req = Json::object();
  req["image"] = ctx.image;
  req[text_field] = std::string(text);
  req["parameters"] = parameters;
  return req;
}

}  // namespace

TransportDetector::TransportDetector(std::shared_ptr<Transport> transport,
                                     CoordinateFrame frame, Json parameters)
    : transport_(std::move(transport)), frame_(frame), parameters_(std::move(parameters)) {}

std::vector<Detection> TransportDetector::detect(const CallContext& ctx,
                                                 std::string_view category) {
  if (category.empty()) {
    throw std::invalid_argument("detect: empty category");
  }
  const Json resp = transport_->call(ctx, base_request(ctx, "query", category, parameters_));
  return decode_detections(Role::Detector, ctx, resp, frame_, category.size());
}

TransportGrounder::TransportGrounder(std::shared_ptr<Transport> transport,
                                     CoordinateFrame frame, Json parameters)
    : transport_(std::move(transport)), frame_(frame), parameters_(std::move(parameters)) {}

GroundingResult TransportGrounder::ground(const CallContext& ctx,
                                          std::string_view expression) {
  if (expression.empty()) {
    throw std::invalid_argument("ground: empty expression");
  }
  const Json resp = transport_->call(ctx, base_request(ctx, "query", expression, parameters_));
  GroundingResult r;
  r.query = std::string(expression);
  r.detections = decode_detections(Role::Grounder, ctx, resp, frame_, expression.size());
  return r;
}

TransportGenerativeGrounder::TransportGenerativeGrounder(
    std::shared_ptr<Transport> transport, CoordinateFrame frame, Json parameters)
    : transport_(std::move(transport)), frame_(frame), parameters_(std::move(parameters)) {}

GenerativeGrounding TransportGenerativeGrounder::generate_ground(
    const CallContext& ctx, std::string_view prompt) {
  if (prompt.empty()) {
    throw std::invalid_argument("generate_ground: empty prompt");
  }
  const Json resp = transport_->call(ctx, base_request(ctx, "prompt", prompt, parameters_));
  raise_if_error(Role::Mllm, ctx, resp);
  auto text = resp.find("text");
  if (text == resp.end() || !text->is_string()) {
    throw BackendError(Role::Mllm, BackendErrorKind::Payload, ctx.task_id,
                       "missing 'text'");
  }
  GenerativeGrounding g = parse_box_answer(text->get<std::string>());
  if (auto probs = resp.find("coordinate_token_probs");
      probs != resp.end() && probs->is_array()) {
    for (const auto& p : *probs) {
      const double v = p.get<double>();
      if (!(v > 0.0 && v <= 1.0)) {
        throw BackendError(Role::Mllm, BackendErrorKind::Payload, ctx.task_id,
                           "coordinate token probability outside (0,1]");
      }
      g.coordinate_token_probs.push_back(v);
    }
  }
  if (g.box) {
    if (g.coordinate_token_probs.empty()) {
      throw BackendError(Role::Mllm, BackendErrorKind::Payload, ctx.task_id,
                         "box without coordinate token probabilities");
    }
    g.box = frame_to_pixels(*g.box, frame_, ctx, Role::Mllm);
  }
  return g;
}

TransportSelector::TransportSelector(std::shared_ptr<Transport> transport,
                                     Json parameters)
    : transport_(std::move(transport)), parameters_(std::move(parameters)) {}

SelectionResult TransportSelector::select(const CallContext& ctx, std::string_view prompt,
                                          std::span<const std::string> labels) {
  if (labels.empty()) throw std::invalid_argument("select: no labels");
  Json params = parameters_;
  params["labels"] = Json::array();
  for (const auto& l : labels) params["labels"].push_back(l);
  const Json resp = transport_->call(ctx, base_request(ctx, "prompt", prompt, params));
  raise_if_error(Role::Selector, ctx, resp);
  SelectionResult r;
  try {
    r.raw_text = resp.at("text").get<std::string>();
    r.label_prob = resp.value("label_prob", 1.0);
  } catch (const Json::exception& e) {
    throw BackendError(Role::Selector, BackendErrorKind::Payload, ctx.task_id, e.what());
  }
  if (!(r.label_prob > 0.0 && r.label_prob <= 1.0)) {
    throw BackendError(Role::Selector, BackendErrorKind::Payload, ctx.task_id,
                       "label_prob outside (0,1]");
  }
  r.label = resolve_choice(r.raw_text, labels);
  return r;
}

namespace {

// Caps in-flight calls on one backend.
class BoundedTransport final : public Transport {
 public:
  BoundedTransport(std::shared_ptr<Transport> inner, int limit)
      : inner_(std::move(inner)), slots_(std::max(1, limit)) {}

  Json call(const CallContext& ctx, const Json& request) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    return inner_->call(ctx, request);
  }
  Role role() const override { return inner_->role(); }

 private:
  std::shared_ptr<Transport> inner_;
  std::counting_semaphore<> slots_;
};

}  // namespace

std::shared_ptr<Transport> make_transport(Role role, const BackendConfig& cfg) {
  std::shared_ptr<Transport> t;
  switch (cfg.kind) {
    case BackendKind::Replay:
      t = std::make_shared<ReplayTransport>(role, cfg.fixture_dir);
      break;
    case BackendKind::Http:
      t = std::make_shared<HttpTransport>(role, cfg);
      break;
    case BackendKind::Heuristic:
      throw std::invalid_argument(std::string(to_string(role)) +
                                  ": heuristic backends have no transport");
  }
  return std::make_shared<BoundedTransport>(std::move(t), cfg.concurrency);
}

BackendBundle make_bundle(const std::map<Role, BackendConfig>& configs) {
  BackendBundle b;
  for (const auto& [role, cfg] : configs) {
    b.cost_units[role] = cfg.cost_units;
    if (role == Role::Extractor && cfg.kind == BackendKind::Heuristic) {
      b.extractor = std::make_shared<HeuristicTargetExtractor>();
      continue;
    }
    if (cfg.kind == BackendKind::Heuristic) {
      throw std::invalid_argument(std::string(to_string(role)) +
                                  ": only the extractor has a heuristic backend");
    }
    auto transport = make_transport(role, cfg);
    switch (role) {
      case Role::Detector:
        b.detector = std::make_shared<TransportDetector>(transport, cfg.frame, cfg.parameters);
        break;
      case Role::Grounder:
        b.grounder = std::make_shared<TransportGrounder>(transport, cfg.frame, cfg.parameters);
        break;
      case Role::Mllm:
        b.mllm = std::make_shared<TransportGenerativeGrounder>(transport, cfg.frame,
                                                               cfg.parameters);
        break;
      case Role::Selector:
        b.selector = std::make_shared<TransportSelector>(transport, cfg.parameters);
        b.selector_frame = cfg.frame;
        break;
      case Role::Extractor:
        b.extractor = std::make_shared<TransportTargetExtractor>(transport, cfg.parameters);
        break;
    }
  }
  return b;
}

}  // namespace recollab
