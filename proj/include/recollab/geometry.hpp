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
#include <vector>

namespace recollab {

// Axis-aligned rectangle in absolute pixels, origin top-left, y down.
// Zero-area boxes are valid; negative extents and non-finite coordinates
// are rejected at construction.
class BBox {
 public:
  BBox() = default;
  BBox(double x0, double y0, double x1, double y1);

  // Returns nullopt instead of throwing when the coordinates are invalid.
  static std::optional<BBox> try_make(double x0, double y0, double x1,
                                      double y1) noexcept;

  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double width() const { return x1_ - x0_; }
  double height() const { return y1_ - y0_; }
  double area() const { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x0_ = 0.0;
  double y0_ = 0.0;
  double x1_ = 0.0;
  double y1_ = 0.0;
};

// Half-open character range [begin, end) into a query string.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool overlaps(const TokenSpan& other) const {
    return begin < other.end && other.begin < end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct TokenScore {
  TokenSpan span;
  double score = 0.0;

  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

struct Detection {
  BBox box;
  double score = 0.0;
  std::optional<std::string> category;
  // Per-token similarity between this proposal and the query text, when the
  // backend exposes them.
  std::vector<TokenScore> token_scores;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Throws std::invalid_argument when a score lies outside [0,1] or token spans
// overlap. `query_length`, when given, bounds the spans.
void validate_detection(const Detection& det,
                        std::optional<std::size_t> query_length = std::nullopt);

// Intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

// Greedy class-agnostic suppression. Detections are visited by descending
// score, ties by ascending input index; a detection is dropped when its IoU
// with an already kept one exceeds `iou_threshold`. Returns kept input
// indices in keep order.
std::vector<std::size_t> nms_indices(std::span<const Detection> dets,
                                     double iou_threshold);

std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_threshold);

// Indices of `dets` sorted by descending score, ties by ascending index.
std::vector<std::size_t> score_order(std::span<const Detection> dets);

}  // namespace recollab
