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

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "recollab/datamodel.hpp"
#include "recollab/geometry.hpp"

namespace recollab {

enum class Role { Detector, Grounder, Mllm, Selector, Extractor };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view s);
inline constexpr Role kAllRoles[] = {Role::Detector, Role::Grounder, Role::Mllm,
                                     Role::Selector, Role::Extractor};

enum class BackendErrorKind { Transport, Timeout, Payload, FixtureMiss, Config };
std::string_view to_string(BackendErrorKind kind);

// Every backend failure carries the task it happened on so the harness can
// log the task as a miss and keep going.
class BackendError : public std::runtime_error {
 public:
  BackendError(Role role, BackendErrorKind kind, std::string task_id,
               const std::string& message);

  Role role() const { return role_; }
  BackendErrorKind kind() const { return kind_; }
  const std::string& task_id() const { return task_id_; }

 private:
  Role role_;
  BackendErrorKind kind_;
  std::string task_id_;
};

struct CallContext {
  std::string task_id;
  std::string image;
  std::optional<ImageSize> image_size;

  static CallContext for_task(const RecTask& task) {
    return CallContext{task.id, task.image, task.image_size};
  }
};

// Coordinate convention spoken by a backend. Internally everything is
// absolute pixels; normalized backends are converted at this boundary.
struct CoordinateFrame {
  enum class Convention { Pixel, Normalized };
  Convention convention = Convention::Pixel;
  double scale = 1000.0;

  bool normalized() const { return convention == Convention::Normalized; }
};

// Throws BackendError(Config) when a normalized frame has no image size.
BBox frame_to_pixels(const BBox& raw, const CoordinateFrame& frame,
                     const CallContext& ctx, Role role);
BBox pixels_to_frame(const BBox& px, const CoordinateFrame& frame,
                     const CallContext& ctx, Role role);

struct GroundingResult {
  std::vector<Detection> detections;  // descending score
  std::string query;
};

struct GenerativeGrounding {
  std::optional<BBox> box;
  std::vector<double> coordinate_token_probs;
  std::string raw_text;
  // Text matched the box pattern but the coordinates were not a valid box.
  bool malformed = false;
};

struct SelectionResult {
  // Absent when the raw output could not be resolved to an offered label.
  std::optional<std::string> label;
  double label_prob = 0.0;
  std::string raw_text;
};

struct TargetExtraction {
  std::string target;
  bool used_fallback = false;
  std::string raw_text;
};

// Parses the first "[[x0, y0, x1, y1]]" group in `text`. Inverted or
// non-finite coordinates leave the box absent and set `malformed`.
GenerativeGrounding parse_box_answer(std::string_view text);

// Geometric mean of the coordinate-token probabilities; nullopt when no box
// was produced.
std::optional<double> derive_confidence(const GenerativeGrounding& g);

// Exact label match on the trimmed text, else the first standalone letter
// (case-insensitive) that names an offered label.
std::optional<std::string> resolve_choice(std::string_view raw,
                                          std::span<const std::string> labels);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const CallContext& ctx,
                                        std::string_view category) = 0;
};

class Grounder {
 public:
  virtual ~Grounder() = default;
  virtual GroundingResult ground(const CallContext& ctx,
                                 std::string_view expression) = 0;
};

class GenerativeGrounder {
 public:
  virtual ~GenerativeGrounder() = default;
  virtual GenerativeGrounding generate_ground(const CallContext& ctx,
                                              std::string_view prompt) = 0;
};

class Selector {
 public:
  virtual ~Selector() = default;
  virtual SelectionResult select(const CallContext& ctx, std::string_view prompt,
                                 std::span<const std::string> labels) = 0;
};

class TargetExtractor {
 public:
  virtual ~TargetExtractor() = default;
  virtual TargetExtraction extract_target(const CallContext& ctx,
                                          std::string_view expression) = 0;
};

// JSON request/response exchange with one model role. Implementations must
// be safe for concurrent calls.
class Transport {
 public:
  virtual ~Transport() = default;
  // `request` carries "image", "query" or "prompt", and "parameters".
  // Returns the response object; {"error": {...}} payloads are raised as
  // BackendError by the caller-side codec.
  virtual Json call(const CallContext& ctx, const Json& request) = 0;
  virtual Role role() const = 0;
};

// Text that keys a request: its "query" or "prompt" field.
std::string request_key_text(const Json& request);

// Raises BackendError for {"error": {"kind": ..., "message": ...}} payloads.
void raise_if_error(Role role, const CallContext& ctx, const Json& response);

std::vector<Detection> decode_detections(Role role, const CallContext& ctx,
                                         const Json& response,
                                         const CoordinateFrame& frame,
                                         std::size_t query_length);

// Role adapters over a transport: build the request, decode the response,
// convert coordinates.
class TransportDetector final : public Detector {
 public:
  TransportDetector(std::shared_ptr<Transport> transport, CoordinateFrame frame,
                    Json parameters = Json::object());
  std::vector<Detection> detect(const CallContext& ctx,
                                std::string_view category) override;

 private:
  std::shared_ptr<Transport> transport_;
  CoordinateFrame frame_;
  Json parameters_;
};

class TransportGrounder final : public Grounder {
 public:
  TransportGrounder(std::shared_ptr<Transport> transport, CoordinateFrame frame,
                    Json parameters = Json::object());
  GroundingResult ground(const CallContext& ctx,
                         std::string_view expression) override;

 private:
  std::shared_ptr<Transport> transport_;
  CoordinateFrame frame_;
  Json parameters_;
};

class TransportGenerativeGrounder final : public GenerativeGrounder {
 public:
  TransportGenerativeGrounder(std::shared_ptr<Transport> transport,
                              CoordinateFrame frame,
                              Json parameters = Json::object());
  GenerativeGrounding generate_ground(const CallContext& ctx,
                                      std::string_view prompt) override;

 private:
  std::shared_ptr<Transport> transport_;
  CoordinateFrame frame_;
  Json parameters_;
};

class TransportSelector final : public Selector {
 public:
  explicit TransportSelector(std::shared_ptr<Transport> transport,
                             Json parameters = Json::object());
  SelectionResult select(const CallContext& ctx, std::string_view prompt,
                         std::span<const std::string> labels) override;

 private:
  std::shared_ptr<Transport> transport_;
  Json parameters_;
};

// Ownership bundle handed to the pipelines. Unused roles may be null.
struct BackendBundle {
  std::shared_ptr<Detector> detector;
  std::shared_ptr<Grounder> grounder;
  std::shared_ptr<GenerativeGrounder> mllm;
  std::shared_ptr<Selector> selector;
  std::shared_ptr<TargetExtractor> extractor;
  // Cost units charged per call, by role.
  std::map<Role, double> cost_units;
  // Coordinate frame the selector expects option boxes in.
  CoordinateFrame selector_frame;

  double cost_of(Role role) const {
    auto it = cost_units.find(role);
    return it == cost_units.end() ? 0.0 : it->second;
  }
};

enum class BackendKind { Http, Replay, Heuristic };

struct BackendConfig {
  BackendKind kind = BackendKind::Replay;
  std::string endpoint;                 // http: "http://host:port/path"
  std::filesystem::path fixture_dir;    // replay
  std::chrono::milliseconds timeout{60'000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};  // doubled per retry
  int concurrency = 8;
  CoordinateFrame frame;
  double cost_units = 0.0;
  std::string bearer_token;
  bool send_image_base64 = false;
  Json parameters = Json::object();
};

std::shared_ptr<Transport> make_transport(Role role, const BackendConfig& cfg);

// Builds every configured role. Roles missing from `configs` stay null.
BackendBundle make_bundle(const std::map<Role, BackendConfig>& configs);

}  // namespace recollab
