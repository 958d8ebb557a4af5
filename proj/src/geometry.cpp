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

#include "recollab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace recollab {

namespace {

bool valid_coords(double x0, double y0, double x1, double y1) {
  return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
         std::isfinite(y1) && x0 <= x1 && y0 <= y1;
}

}  // namespace

BBox::BBox(double x0, double y0, double x1, double y1)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (!valid_coords(x0, y0, x1, y1)) {
    throw std::invalid_argument("invalid box: coordinates must be finite with "
                                "x0 <= x1 and y0 <= y1");
  }
}

std::optional<BBox> BBox::try_make(double x0, double y0, double x1,
                                   double y1) noexcept {
  if (!valid_coords(x0, y0, x1, y1)) return std::nullopt;
  return BBox(x0, y0, x1, y1);
}

void validate_detection(const Detection& det,
                        std::optional<std::size_t> query_length) {
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    throw std::invalid_argument("detection score outside [0,1]");
  }
  std::vector<TokenSpan> spans;
  spans.reserve(det.token_scores.size());
  for (const auto& ts : det.token_scores) {
    if (!(ts.score >= 0.0 && ts.score <= 1.0)) {
      throw std::invalid_argument("token score outside [0,1]");
    }
    if (ts.span.begin >= ts.span.end) {
      throw std::invalid_argument("empty or inverted token span");
    }
    if (query_length && ts.span.end > *query_length) {
      throw std::invalid_argument("token span exceeds query length");
    }
    spans.push_back(ts.span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const TokenSpan& a, const TokenSpan& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i - 1].overlaps(spans[i])) {
      throw std::invalid_argument("overlapping token spans");
    }
  }
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) {
                     return dets[l].score > dets[r].score;
                   });
  return order;
}

std::vector<std::size_t> nms_indices(std::span<const Detection> dets,
                                     double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms threshold outside [0,1]");
  }
  const auto order = score_order(dets);
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<std::size_t> keep;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    keep.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!suppressed[j] && iou(dets[i].box, dets[j].box) > iou_threshold) {
        suppressed[j] = true;
      }
    }
  }
  return keep;
}

std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_threshold) {
  std::vector<Detection> out;
  for (std::size_t i : nms_indices(dets, iou_threshold)) out.push_back(dets[i]);
  return out;
}

}  // namespace recollab
