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

#include "recollab/sfa.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

namespace recollab {

namespace {

std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
  for (std::size_t pos = text.find(placeholder); pos != std::string::npos;
       pos = text.find(placeholder, pos + value.size())) {
    text.replace(pos, placeholder.size(), value);
  }
  return text;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename T>
T& require(const std::shared_ptr<T>& backend, Role role, const RecTask& task) {
  if (!backend) {
    throw BackendError(role, BackendErrorKind::Config, task.id, "backend not configured");
  }
  return *backend;
}

Prediction failed(const RecTask& task, std::optional<Pathway> pathway, const std::string& what) {
  Prediction p;
  p.task_id = task.id;
  p.pathway = pathway;
  p.error = what;
  return p;
}

// Fast pathway: specialist grounding on the full expression.
void run_fast(const RecTask& task, const BackendBundle& b, const SfaConfig& cfg,
              const std::optional<std::string>& target, Prediction& p) {
  const auto ctx = CallContext::for_task(task);
  GroundingResult g = require(b.grounder, Role::Grounder, task).ground(ctx, task.expression);
  p.cost_units += b.cost_of(Role::Grounder);
  if (g.detections.empty()) {
    p.notes.push_back("no proposals");
    return;
  }
  if (cfg.focus && target) {
    const auto span = find_target_span(g.query, *target);
    const FocusSelection sel = target_focus_select(g, span);
    if (sel.fallback) {
      p.notes.push_back("focus fallback: overall score");
    }
    const Detection& d = g.detections[sel.index];
    p.box = d.box;
    p.confidence = d.score;
    p.ranked.push_back(ScoredBox{d.box, d.score});
  } else {
    p.box = g.detections.front().box;
    p.confidence = g.detections.front().score;
    for (const auto& d : g.detections) p.ranked.push_back(ScoredBox{d.box, d.score});
  }
}

void run_slow(const RecTask& task, const BackendBundle& b, const SfaConfig& cfg,
              const std::optional<std::string>& target, Prediction& p) {
  const auto ctx = CallContext::for_task(task);
  const std::string prompt = (cfg.focus && target)
                                 ? build_focus_prompt(task.expression, *target, cfg)
                                 : build_base_prompt(task.expression, cfg);
  GenerativeGrounding g = require(b.mllm, Role::Mllm, task).generate_ground(ctx, prompt);
  p.cost_units += b.cost_of(Role::Mllm);
  p.raw = g.raw_text;
  if (g.malformed) p.notes.push_back("malformed box in output");
  if (!g.box) return;
  p.box = g.box;
  p.confidence = derive_confidence(g).value_or(0.0);
  p.ranked.push_back(ScoredBox{*g.box, p.confidence});
}

std::string extract(const RecTask& task, const BackendBundle& b, Prediction& p) {
  TargetExtraction t =
      require(b.extractor, Role::Extractor, task).extract_target(CallContext::for_task(task), task.expression);
  p.cost_units += b.cost_of(Role::Extractor);
  if (t.used_fallback) p.notes.push_back("target extraction fallback: heuristic");
  if (t.target.empty()) {
    throw BackendError(Role::Extractor, BackendErrorKind::Payload, task.id, "empty target");
  }
  return t.target;
}

}  // namespace

RouteDecision route_from_detections(std::span<const Detection> dets, std::string_view target,
                                    double threshold) {
  RouteDecision d;
  d.target = std::string(target);
  d.threshold_used = threshold;
  d.detection_count = static_cast<std::size_t>(std::count_if(
      dets.begin(), dets.end(), [&](const Detection& det) { return det.score >= threshold; }));
  d.level = d.detection_count == 1 ? RouteLevel::Fast : RouteLevel::Slow;
  return d;
}

RouteDecision assess_route(const CallContext& ctx, std::string_view target, Detector& detector,
                           double threshold) {
  if (target.empty()) throw std::invalid_argument("assess_route: empty target");
  const auto dets = detector.detect(ctx, target);
  return route_from_detections(dets, target, threshold);
}

std::string build_base_prompt(std::string_view expression, const SfaConfig& cfg) {
  return replace_all(cfg.base_prompt, "<expr>", expression);
}

std::string build_focus_prompt(std::string_view expression, std::string_view target,
                               const SfaConfig& cfg) {
  std::string prompt = build_base_prompt(expression, cfg);
  if (!cfg.focus) return prompt;
  return prompt + replace_all(cfg.focus_suffix, "<target>", target);
}

std::optional<TokenSpan> find_target_span(std::string_view query, std::string_view target) {
  if (target.empty()) return std::nullopt;
  const std::string q = lower(query);
  const std::string t = lower(target);
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  std::optional<TokenSpan> first;
  for (std::size_t pos = q.find(t); pos != std::string::npos; pos = q.find(t, pos + 1)) {
    const TokenSpan span{pos, pos + t.size()};
    if (!first) first = span;
    const bool left_ok = pos == 0 || !is_word(q[pos - 1]);
    const bool right_ok = span.end == q.size() || !is_word(q[span.end]);
    if (left_ok && right_ok) return span;
  }
  return first;
}

FocusSelection target_focus_select(const GroundingResult& g,
                                   const std::optional<TokenSpan>& target_span) {
  if (g.detections.empty()) throw std::invalid_argument("target_focus_select: no proposals");
  auto overall = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.detections.size(); ++i) {
      if (g.detections[i].score > g.detections[best].score) best = i;
    }
    return FocusSelection{best, g.detections[best].score, true};
  };
  if (!target_span) return overall();
  bool any = false;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.detections.size(); ++i) {
    double agg = -std::numeric_limits<double>::infinity();
    for (const auto& ts : g.detections[i].token_scores) {
      if (ts.span.overlaps(*target_span)) agg = std::max(agg, ts.score);
    }
    if (agg == -std::numeric_limits<double>::infinity()) continue;
    any = true;
    if (agg > best_score) {
      best_score = agg;
      best = i;
    }
  }
  if (!any) return overall();
  return FocusSelection{best, best_score, false};
}

Prediction run_specialist(const RecTask& task, const BackendBundle& backends,
                          const SfaConfig& cfg) {
  Prediction p;
  p.task_id = task.id;
  p.pathway = Pathway::Fast;
  try {
    std::optional<std::string> target;
    if (cfg.focus) target = extract(task, backends, p);
    run_fast(task, backends, cfg, target, p);
  } catch (const std::exception& e) {
    spdlog::warn("task {}: {}", task.id, e.what());
    return failed(task, Pathway::Fast, e.what());
  }
  return p;
}

Prediction run_mllm(const RecTask& task, const BackendBundle& backends, const SfaConfig& cfg) {
  Prediction p;
  p.task_id = task.id;
  p.pathway = Pathway::Slow;
  try {
    std::optional<std::string> target;
    if (cfg.focus) target = extract(task, backends, p);
    run_slow(task, backends, cfg, target, p);
  } catch (const std::exception& e) {
    spdlog::warn("task {}: {}", task.id, e.what());
    return failed(task, Pathway::Slow, e.what());
  }
  return p;
}

Prediction run_sfa(const RecTask& task, const BackendBundle& backends, const SfaConfig& cfg) {
  if (cfg.force == SfaConfig::Force::Fast) return run_specialist(task, backends, cfg);
  if (cfg.force == SfaConfig::Force::Slow) return run_mllm(task, backends, cfg);
  Prediction p;
  p.task_id = task.id;
  try {
    const std::string target = extract(task, backends, p);
    RouteDecision d = assess_route(CallContext::for_task(task), target,
                                   require(backends.detector, Role::Detector, task), cfg.threshold);
    p.cost_units += backends.cost_of(Role::Detector);
    p.decision = d;
    p.pathway = d.level == RouteLevel::Fast ? Pathway::Fast : Pathway::Slow;
    if (d.level == RouteLevel::Fast) {
      run_fast(task, backends, cfg, target, p);
    } else {
      run_slow(task, backends, cfg, target, p);
    }
  } catch (const std::exception& e) {
    spdlog::warn("task {}: {}", task.id, e.what());
    Prediction f = failed(task, p.pathway, e.what());
    f.decision = p.decision;
    return f;
  }
  return p;
}

}  // namespace recollab
