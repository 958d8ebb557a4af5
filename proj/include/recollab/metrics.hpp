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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "recollab/datamodel.hpp"
#include "recollab/prediction.hpp"

namespace recollab {

inline constexpr double kHitIou = 0.5;

struct ScoredPrediction {
  std::string task_id;
  std::vector<ScoredBox> ranked_boxes;  // best first; empty for a rejection

  // Sample-level confidence: the top box's, 0 for a rejection.
  double top_confidence() const {
    return ranked_boxes.empty() ? 0.0 : ranked_boxes.front().confidence;
  }
};

// Uses the prediction's ranked list, or its single box when the list is
// empty.
ScoredPrediction to_scored(const Prediction& p);

using PredictionMap = std::unordered_map<std::string, ScoredPrediction>;
PredictionMap index_predictions(std::span<const Prediction> preds);

// A ratio together with its denominator.
struct Cell {
  std::size_t hits = 0;
  std::size_t total = 0;
  // Items with no prediction: counted as misses for precision, dropped for
  // recall.
  std::size_t missing = 0;

  std::optional<double> value() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(total);
  }
};

// Fraction of `positives` whose top-k boxes include one with IoU > iou_thr
// against the ground truth.
Cell precision_at_k(const PredictionMap& preds, std::span<const RecTask* const> positives,
                    std::size_t k, double iou_thr = kHitIou);
Cell precision_at_k(const PredictionMap& preds, const TaskSet& ts, std::size_t k,
                    double iou_thr = kHitIou);

// Entry of the per-pair pooled ranking.
struct PooledBox {
  double confidence = 0.0;
  bool from_positive = true;
  std::size_t order = 0;  // positive's boxes first, then the negative's
  double iou = 0.0;       // 0 for boxes predicted on the negative sample
};

// Pooled ranking order: higher confidence first; ties favour the positive
// sample's boxes, then input order.
bool pooled_before(const PooledBox& a, const PooledBox& b);

std::vector<PooledBox> pool_pair(const ScoredPrediction& positive, const ScoredPrediction& negative,
                                 const BBox& gt);

// Fraction of negative-positive pairs whose pooled top-k contains a box
// with IoU > iou_thr against the positive's ground truth.
Cell recall_at_k(std::span<const EvalPair> pairs, const PredictionMap& preds, std::size_t k,
                 double iou_thr = kHitIou);

// P(pos > neg) + P(pos = neg) / 2 over all cross pairs, from a sorted sweep.
// nullopt when either list is empty.
std::optional<double> auroc(std::span<const double> pos, std::span<const double> neg);

struct MetricRow {
  std::string metric;  // "precision" | "recall"
  std::size_t k = 1;
  std::string cell;  // "overall", "L1", "negative_expression/replace/object/L1", ...
  Cell value;
};

struct AurocRow {
  std::string cell;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> value;
};

struct PathwayStats {
  std::map<std::string, std::size_t> tasks;  // "fast", "slow", "crs", "none"
  std::map<std::string, double> cost;
  double total_cost = 0.0;
  std::size_t failures = 0;
  std::size_t rejections = 0;
  // Cost of sending every task down a reference pathway, when configured.
  std::optional<double> reference_cost;
};

struct RunMetadata {
  std::string pipeline;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string cost_provenance;
};

struct EvalReport {
  RunMetadata meta;
  std::size_t tasks = 0;
  std::size_t missing_predictions = 0;
  std::vector<MetricRow> rows;
  std::vector<AurocRow> auroc;
  PathwayStats pathways;

  Json to_json() const;
  std::string render_text() const;
};

struct ReportInputs {
  const TaskSet* tasks = nullptr;
  std::span<const Prediction> predictions;
  std::vector<std::size_t> ks{1};
  RunMetadata meta;
  // Per-task unit cost of the reference pathway (e.g. MLLM-only).
  std::optional<double> reference_unit_cost;
};

EvalReport build_report(const ReportInputs& in);

}  // namespace recollab
