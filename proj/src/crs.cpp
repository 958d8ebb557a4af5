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

#include "recollab/crs.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "recollab/hashing.hpp"

namespace recollab {

namespace {

std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
  for (std::size_t pos = text.find(placeholder); pos != std::string::npos;
       pos = text.find(placeholder, pos + value.size())) {
    text.replace(pos, placeholder.size(), value);
  }
  return text;
}

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t r = 0;
  do {
    r = gen();
  } while (r < threshold);
  return r % n;
}

}  // namespace

std::string option_label(std::size_t index) {
  if (index >= 26) throw std::out_of_range("more than 26 options");
  return std::string(1, static_cast<char>('A' + index));
}

CandidateSet generate_candidates(std::span<const Detection> dets, std::size_t k,
                                 double nms_threshold) {
  if (k == 0) throw std::invalid_argument("generate_candidates: k must be >= 1");
  CandidateSet cs;
  cs.k = k;
  const auto keep = nms_indices(dets, nms_threshold);
  const std::size_t n = std::min(k, keep.size());
  for (std::size_t i = 0; i < n; ++i) {
    cs.candidates.push_back(Candidate{option_label(i), dets[keep[i]]});
  }
  return cs;
}

std::vector<std::string> ChoicePrompt::labels() const {
  std::vector<std::string> out;
  out.reserve(options.size());
  for (const auto& o : options) out.push_back(o.label);
  return out;
}

std::optional<BBox> ChoicePrompt::box_for(std::string_view label) const {
  for (const auto& o : options) {
    if (o.label == label) return o.box;
  }
  return std::nullopt;
}

std::string render_box(const BBox& box, const OptionRendering& rendering) {
  BBox b = box;
  if (rendering.frame.normalized()) {
    if (!rendering.image_size) {
      throw std::invalid_argument("normalized option rendering needs the image size");
    }
    const double sx = rendering.frame.scale / rendering.image_size->width;
    const double sy = rendering.frame.scale / rendering.image_size->height;
    b = BBox(box.x0() * sx, box.y0() * sy, box.x1() * sx, box.y1() * sy);
  }
  return "[[" + std::to_string(round_half_up(b.x0())) + ", " +
         std::to_string(round_half_up(b.y0())) + ", " + std::to_string(round_half_up(b.x1())) +
         ", " + std::to_string(round_half_up(b.y1())) + "]]";
}

ChoicePrompt build_choice_prompt(std::string_view expression, std::vector<ChoiceOption> options,
                                 bool include_none, const ChoiceTemplates& templates,
                                 const OptionRendering& rendering) {
  if (options.empty() && !include_none) {
    throw std::invalid_argument("build_choice_prompt: no options");
  }
  ChoicePrompt cp;
  cp.options = std::move(options);
  if (include_none) {
    cp.none_label = option_label(cp.options.size());
    cp.options.push_back(ChoiceOption{*cp.none_label, std::nullopt});
  }
  std::string text = replace_all(templates.question, "<expr>", expression);
  text += '\n';
  for (const auto& o : cp.options) {
    text += o.label;
    text += ". ";
    text += o.box ? render_box(*o.box, rendering) : std::string("None");
    text += '\n';
  }
  if (include_none && !templates.none_instruction.empty()) {
    text += templates.none_instruction;
    text += '\n';
  }
  text += templates.answer_instruction;
  cp.text = std::move(text);
  return cp;
}

ChoicePrompt build_choice_prompt(std::string_view expression, const CandidateSet& cs,
                                 bool include_none, const ChoiceTemplates& templates,
                                 const OptionRendering& rendering) {
  std::vector<ChoiceOption> options;
  options.reserve(cs.size());
  for (const auto& c : cs.candidates) options.push_back(ChoiceOption{c.label, c.detection.box});
  return build_choice_prompt(expression, std::move(options), include_none, templates, rendering);
}

std::optional<std::string> parse_choice(std::string_view raw, const ChoicePrompt& cp) {
  const auto labels = cp.labels();
  return resolve_choice(raw, labels);
}

Prediction run_crs(const RecTask& task, const BackendBundle& b, const CrsConfig& cfg) {
  Prediction p;
  p.task_id = task.id;
  p.pathway = Pathway::Crs;
  const auto ctx = CallContext::for_task(task);
  try {
    if (!b.grounder) {
      throw BackendError(Role::Grounder, BackendErrorKind::Config, task.id, "backend not configured");
    }
    const GroundingResult g = b.grounder->ground(ctx, task.expression);
    p.cost_units += b.cost_of(Role::Grounder);
    const CandidateSet cs = generate_candidates(g.detections, cfg.k, cfg.nms_threshold);
    if (cs.empty() && !cfg.include_none) {
      p.notes.push_back("no candidates");
      return p;
    }
    const ChoicePrompt cp = build_choice_prompt(task.expression, cs, cfg.include_none,
                                                cfg.templates,
                                                OptionRendering{b.selector_frame, task.image_size});
    if (!b.selector) {
      throw BackendError(Role::Selector, BackendErrorKind::Config, task.id, "backend not configured");
    }
    const auto labels = cp.labels();
    const SelectionResult sel = b.selector->select(ctx, cp.text, labels);
    p.cost_units += b.cost_of(Role::Selector);
    p.raw = sel.raw_text;
    if (!sel.label) {
      p.error = "unparseable selector output";
      return p;
    }
    if (cp.none_label && *sel.label == *cp.none_label) {
      p.notes.push_back("selected None");
      return p;
    }
    p.box = cp.box_for(*sel.label);
    p.confidence = sel.label_prob;
    p.ranked.push_back(ScoredBox{*p.box, p.confidence});
  } catch (const std::exception& e) {
    spdlog::warn("task {}: {}", task.id, e.what());
    Prediction f;
    f.task_id = task.id;
    f.pathway = Pathway::Crs;
    f.error = e.what();
    return f;
  }
  return p;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) {
  std::string material = std::to_string(seed);
  material += '\x1f';
  material += salt;
  const std::string hex = sha256_hex(material);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(items[i - 1], items[j]);
  }
}

ExportResult export_tuning(const TaskSet& ts, Grounder& grounder, const ExportConfig& cfg) {
  if (cfg.k == 0) throw std::invalid_argument("export_tuning: k must be >= 1");
  ExportResult result;
  std::vector<std::size_t> pos_idx;
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    (ts.tasks()[i].is_positive() ? pos_idx : neg_idx).push_back(i);
  }
  seeded_shuffle(pos_idx, derive_seed(cfg.seed, "positives"));
  seeded_shuffle(neg_idx, derive_seed(cfg.seed, "negatives"));

  std::vector<std::pair<std::size_t, TuningSample>> picked;

  auto make_sample = [&](const RecTask& t, const CandidateSet& cs) {
    std::vector<std::size_t> order(cs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, derive_seed(cfg.seed, t.id));
    std::vector<ChoiceOption> options;
    options.reserve(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      options.push_back(ChoiceOption{option_label(pos), cs.candidates[order[pos]].detection.box});
    }
    const ChoicePrompt cp = build_choice_prompt(t.expression, options, cfg.include_none,
                                                cfg.templates);
    TuningSample s;
    s.task_id = t.id;
    s.image = t.image;
    s.expression = t.expression;
    s.options = cp.options;
    s.prompt = cp.text;
    s.from_positive = t.is_positive();
    if (t.is_positive()) {
      std::size_t best = 0;
      double best_iou = -1.0;
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const double v = iou(*options[pos].box, *t.gt_box);
        if (v > best_iou) {
          best_iou = v;
          best = pos;
        }
      }
      s.answer = option_label(best);
    } else {
      s.answer = *cp.none_label;
    }
    return s;
  };

  auto visit = [&](const std::vector<std::size_t>& indices, std::size_t wanted, bool positive) {
    std::size_t taken = 0;
    for (std::size_t idx : indices) {
      if (taken >= wanted) break;
      const RecTask& t = ts.tasks()[idx];
      CandidateSet cs;
      try {
        const GroundingResult g = grounder.ground(CallContext::for_task(t), t.expression);
        cs = generate_candidates(g.detections, cfg.k, cfg.nms_threshold);
      } catch (const BackendError& e) {
        ++result.backend_errors;
        spdlog::warn("export: {}", e.what());
        continue;
      }
      if (positive) {
        const bool hit = std::any_of(cs.candidates.begin(), cs.candidates.end(), [&](const Candidate& c) {
          return iou(c.detection.box, *t.gt_box) > kMatchIou;
        });
        if (!hit) continue;
      } else if (cs.empty()) {
        continue;
      }
      picked.emplace_back(idx, make_sample(t, cs));
      ++taken;
    }
    if (taken < wanted) {
      const std::string msg = std::string("requested ") + std::to_string(wanted) +
                              (positive ? " positive" : " negative") + " samples, only " +
                              std::to_string(taken) + " eligible";
      spdlog::warn("export: {}", msg);
      result.warnings.push_back(msg);
    }
    return taken;
  };

  result.positives = visit(pos_idx, cfg.positives, true);
  if (cfg.negatives > 0 && !cfg.include_none) {
    const std::string msg = "negative samples need the None option; none exported";
    spdlog::warn("export: {}", msg);
    result.warnings.push_back(msg);
  } else {
    result.negatives = visit(neg_idx, cfg.negatives, false);
  }

  std::sort(picked.begin(), picked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  result.samples.reserve(picked.size());
  for (auto& [idx, s] : picked) result.samples.push_back(std::move(s));
  return result;
}

Json tuning_sample_to_json(const TuningSample& s) {
  Json j = Json::object();
  j["id"] = s.task_id;
  j["image"] = s.image;
  j["expression"] = s.expression;
  j["options"] = Json::array();
  for (const auto& o : s.options) {
    j["options"].push_back(Json{{"label", o.label}, {"box", o.box ? box_to_json(*o.box) : Json()}});
  }
  j["answer"] = s.answer;
  j["prompt"] = s.prompt;
  return j;
}

void write_tuning(std::ostream& out, std::span<const TuningSample> samples) {
  for (const auto& s : samples) out << tuning_sample_to_json(s).dump() << '\n';
}

}  // namespace recollab
