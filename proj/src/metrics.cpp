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

#include "recollab/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace recollab {

ScoredPrediction to_scored(const Prediction& p) {
  ScoredPrediction s;
  s.task_id = p.task_id;
  if (!p.ranked.empty()) {
    s.ranked_boxes = p.ranked;
  } else if (p.box) {
    s.ranked_boxes.push_back(ScoredBox{*p.box, p.confidence});
  }
  return s;
}

PredictionMap index_predictions(std::span<const Prediction> preds) {
  PredictionMap m;
  m.reserve(preds.size());
  for (const auto& p : preds) m[p.task_id] = to_scored(p);
  return m;
}

namespace {

bool top_k_hit(const ScoredPrediction& sp, const BBox& gt, std::size_t k, double thr) {
  const std::size_t n = std::min(k, sp.ranked_boxes.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (iou(sp.ranked_boxes[i].box, gt) > thr) return true;
  }
  return false;
}

}  // namespace

Cell precision_at_k(const PredictionMap& preds, std::span<const RecTask* const> positives,
                    std::size_t k, double iou_thr) {
  Cell c;
  for (const RecTask* t : positives) {
    ++c.total;
    auto it = preds.find(t->id);
    if (it == preds.end()) {
      ++c.missing;
      continue;
    }
    if (t->gt_box && top_k_hit(it->second, *t->gt_box, k, iou_thr)) ++c.hits;
  }
  if (c.missing > 0) spdlog::warn("precision@{}: {} positive task(s) have no prediction", k, c.missing);
  return c;
}

Cell precision_at_k(const PredictionMap& preds, const TaskSet& ts, std::size_t k, double iou_thr) {
  std::vector<const RecTask*> positives;
  for (const auto& t : ts.tasks()) {
    if (t.is_positive()) positives.push_back(&t);
  }
  return precision_at_k(preds, positives, k, iou_thr);
}

bool pooled_before(const PooledBox& a, const PooledBox& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.from_positive != b.from_positive) return a.from_positive;
  return a.order < b.order;
}

std::vector<PooledBox> pool_pair(const ScoredPrediction& positive, const ScoredPrediction& negative,
                                 const BBox& gt) {
  std::vector<PooledBox> pool;
  pool.reserve(positive.ranked_boxes.size() + negative.ranked_boxes.size());
  std::size_t order = 0;
  for (const auto& b : positive.ranked_boxes) {
    pool.push_back(PooledBox{b.confidence, true, order++, iou(b.box, gt)});
  }
  for (const auto& b : negative.ranked_boxes) {
    pool.push_back(PooledBox{b.confidence, false, order++, 0.0});
  }
  std::sort(pool.begin(), pool.end(), pooled_before);
  return pool;
}

Cell recall_at_k(std::span<const EvalPair> pairs, const PredictionMap& preds, std::size_t k,
                 double iou_thr) {
  Cell c;
  for (const auto& pair : pairs) {
    auto pos = preds.find(pair.positive->id);
    auto neg = preds.find(pair.negative->id);
    if (pos == preds.end() || neg == preds.end()) {
      ++c.missing;
      continue;
    }
    ++c.total;
    const auto pool = pool_pair(pos->second, neg->second, *pair.positive->gt_box);
    const std::size_t n = std::min(k, pool.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (pool[i].iou > iou_thr) {
        ++c.hits;
        break;
      }
    }
  }
  if (c.missing > 0) spdlog::warn("recall@{}: dropped {} pair(s) with a missing prediction", k, c.missing);
  return c;
}

std::optional<double> auroc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) return std::nullopt;
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  // Twice the Mann-Whitney U, kept integral so the ratio is exact.
  unsigned long long twice_u = 0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted_neg.begin(), sorted_neg.end(), p);
    const auto hi = std::upper_bound(lo, sorted_neg.end(), p);
    twice_u += 2ULL * static_cast<unsigned long long>(lo - sorted_neg.begin()) +
               static_cast<unsigned long long>(hi - lo);
  }
  const double denom = 2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size());
  return static_cast<double>(twice_u) / denom;
}

EvalReport build_report(const ReportInputs& in) {
  static const TaskSet kEmpty;
  const TaskSet& ts = in.tasks ? *in.tasks : kEmpty;
  EvalReport r;
  r.meta = in.meta;
  r.tasks = ts.size();

  const PredictionMap preds = index_predictions(in.predictions);
  for (const auto& t : ts.tasks()) {
    if (!preds.contains(t.id)) ++r.missing_predictions;
  }

  // Positive cells by difficulty.
  std::map<std::string, std::vector<const RecTask*>> positive_cells;
  positive_cells["overall"];
  for (const auto& t : ts.tasks()) {
    if (!t.is_positive()) continue;
    positive_cells["overall"].push_back(&t);
    positive_cells[t.difficulty ? std::string(to_string(*t.difficulty)) : "unlabeled"].push_back(&t);
  }

  // Pair cells by negative type.
  const auto all_pairs = pair_negatives(ts);
  std::map<std::string, std::vector<EvalPair>> pair_cells;
  pair_cells["overall"];
  for (const auto& p : all_pairs) {
    const std::string pol(to_string(p.negative->polarity));
    pair_cells["overall"].push_back(p);
    pair_cells[pol].push_back(p);
    if (p.negative->negative_kind) {
      pair_cells[pol + "/" + p.negative->negative_kind->key()].push_back(p);
    }
  }

  for (std::size_t k : in.ks) {
    for (const auto& [cell, tasks] : positive_cells) {
      r.rows.push_back(MetricRow{"precision", k, cell, precision_at_k(preds, tasks, k)});
    }
    for (const auto& [cell, pairs] : pair_cells) {
      r.rows.push_back(MetricRow{"recall", k, cell, recall_at_k(pairs, preds, k)});
    }
  }

  auto score_of = [&](const RecTask& t) {
    auto it = preds.find(t.id);
    return it == preds.end() ? 0.0 : it->second.top_confidence();
  };
  std::vector<double> pos_scores;
  for (const RecTask* t : positive_cells["overall"]) pos_scores.push_back(score_of(*t));
  for (const auto& [cell, pairs] : pair_cells) {
    std::vector<double> neg_scores;
    for (const auto& p : pairs) neg_scores.push_back(score_of(*p.negative));
    r.auroc.push_back(AurocRow{cell, pos_scores.size(), neg_scores.size(), auroc(pos_scores, neg_scores)});
  }

  for (const auto& p : in.predictions) {
    const std::string key = p.pathway ? std::string(to_string(*p.pathway)) : "none";
    ++r.pathways.tasks[key];
    r.pathways.cost[key] += p.cost_units;
    r.pathways.total_cost += p.cost_units;
    if (p.error) ++r.pathways.failures;
    if (p.rejected()) ++r.pathways.rejections;
  }
  if (in.reference_unit_cost) {
    r.pathways.reference_cost = *in.reference_unit_cost * static_cast<double>(in.predictions.size());
  }
  return r;
}

namespace {

Json cell_json(const Cell& c) {
  Json j = Json::object();
  j["hits"] = c.hits;
  j["total"] = c.total;
  j["missing"] = c.missing;
  j["value"] = c.value() ? Json(*c.value()) : Json();
  return j;
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * *v;
  return os.str();
}

}  // namespace

Json EvalReport::to_json() const {
  Json j = Json::object();
  j["meta"] = Json{{"pipeline", meta.pipeline},
                   {"config_hash", meta.config_hash},
                   {"seed", meta.seed},
                   {"cost_provenance", meta.cost_provenance}};
  j["tasks"] = tasks;
  j["missing_predictions"] = missing_predictions;
  j["metrics"] = Json::array();
  for (const auto& row : rows) {
    Json m = Json{{"metric", row.metric}, {"k", row.k}, {"cell", row.cell}};
    m["value"] = cell_json(row.value);
    j["metrics"].push_back(std::move(m));
  }
  j["auroc"] = Json::array();
  for (const auto& a : auroc) {
    j["auroc"].push_back(Json{{"cell", a.cell},
                              {"positives", a.positives},
                              {"negatives", a.negatives},
                              {"value", a.value ? Json(*a.value) : Json()}});
  }
  Json pw = Json::object();
  pw["tasks"] = Json::object();
  for (const auto& [k, v] : pathways.tasks) pw["tasks"][k] = v;
  pw["cost"] = Json::object();
  for (const auto& [k, v] : pathways.cost) pw["cost"][k] = v;
  pw["total_cost"] = pathways.total_cost;
  pw["reference_cost"] = pathways.reference_cost ? Json(*pathways.reference_cost) : Json();
  pw["relative_cost"] = (pathways.reference_cost && *pathways.reference_cost > 0.0)
                            ? Json(pathways.total_cost / *pathways.reference_cost)
                            : Json();
  pw["failures"] = pathways.failures;
  pw["rejections"] = pathways.rejections;
  j["pathways"] = std::move(pw);
  return j;
}

std::string EvalReport::render_text() const {
  std::ostringstream os;
  os << "pipeline " << meta.pipeline << "  seed " << meta.seed << "  config " << meta.config_hash
     << '\n';
  os << tasks << " tasks, " << missing_predictions << " without prediction\n\n";
  os << std::left << std::setw(10) << "metric" << std::setw(4) << "k" << std::setw(44) << "cell"
     << std::right << std::setw(8) << "value" << std::setw(14) << "hits/total" << '\n';
  for (const auto& row : rows) {
    os << std::left << std::setw(10) << row.metric << std::setw(4) << row.k << std::setw(44)
       << row.cell << std::right << std::setw(8) << pct(row.value.value()) << std::setw(14)
       << (std::to_string(row.value.hits) + "/" + std::to_string(row.value.total)) << '\n';
  }
  os << '\n' << std::left << std::setw(58) << "auroc cell" << std::right << std::setw(8) << "value"
     << std::setw(14) << "pos x neg" << '\n';
  for (const auto& a : auroc) {
    os << std::left << std::setw(58) << a.cell << std::right << std::setw(8) << pct(a.value)
       << std::setw(14) << (std::to_string(a.positives) + "x" + std::to_string(a.negatives)) << '\n';
  }
  std::size_t routed = 0;
  for (const auto& [k, n] : pathways.tasks) routed += n;
  os << "\npathway   tasks   share      cost\n";
  for (const auto& [k, n] : pathways.tasks) {
    os << std::left << std::setw(8) << k << std::right << std::setw(7) << n << std::setw(8)
       << pct(static_cast<double>(n) / static_cast<double>(routed)) << std::setw(10)
       << pathways.cost.at(k) << '\n';
  }
  os << "total cost " << pathways.total_cost;
  if (pathways.reference_cost && *pathways.reference_cost > 0.0) {
    os << " (" << pct(pathways.total_cost / *pathways.reference_cost) << "% of reference "
       << *pathways.reference_cost << ")";
  }
  os << "\nfailures " << pathways.failures << ", rejections " << pathways.rejections << '\n';
  if (!meta.cost_provenance.empty()) os << "cost units: " << meta.cost_provenance << '\n';
  return os.str();
}

}  // namespace recollab
