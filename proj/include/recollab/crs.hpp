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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recollab/backends.hpp"
#include "recollab/datamodel.hpp"
#include "recollab/prediction.hpp"

namespace recollab {

inline constexpr std::size_t kDefaultTopK = 5;
inline constexpr double kDefaultNmsThreshold = 0.7;
inline constexpr double kMatchIou = 0.5;

// "A", "B", ... for i = 0, 1, ...; throws std::out_of_range past "Z".
std::string option_label(std::size_t index);

struct Candidate {
  std::string label;
  Detection detection;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::size_t k = kDefaultTopK;
  std::optional<std::string> none_label;

  bool empty() const { return candidates.empty(); }
  std::size_t size() const { return candidates.size(); }
};

// NMS at `nms_threshold`, then the first min(k, survivors) by confidence,
// labeled A, B, ...
CandidateSet generate_candidates(std::span<const Detection> dets, std::size_t k = kDefaultTopK,
                                 double nms_threshold = kDefaultNmsThreshold);

struct ChoiceTemplates {
  // "<expr>" is substituted.
  std::string question =
      "Which region does the expression \"<expr>\" refer to? Choose one of the "
      "following options.";
  std::string none_instruction =
      "If no suitable option exists, please select the option corresponding to \"None\".";
  std::string answer_instruction = "Answer with the option's letter from the given choices directly.";
};

struct ChoiceOption {
  std::string label;
  std::optional<BBox> box;  // absent for the None option
};

struct ChoicePrompt {
  std::string text;
  std::vector<ChoiceOption> options;  // prompt order, None last
  std::optional<std::string> none_label;

  std::vector<std::string> labels() const;
  // Box behind `label`; nullopt for the None label or an unknown label.
  std::optional<BBox> box_for(std::string_view label) const;
};

// How option boxes are printed: integer pixels by default, or the
// selector's normalized convention (needs the image size).
struct OptionRendering {
  CoordinateFrame frame;
  std::optional<ImageSize> image_size;
};

// "[[x0, y0, x1, y1]]" with each coordinate rounded half-up to an integer.
std::string render_box(const BBox& box, const OptionRendering& rendering = {});

// Options in candidate order; "None" appended as the next letter when
// `include_none`.
ChoicePrompt build_choice_prompt(std::string_view expression, const CandidateSet& cs,
                                 bool include_none, const ChoiceTemplates& templates = {},
                                 const OptionRendering& rendering = {});
ChoicePrompt build_choice_prompt(std::string_view expression, std::vector<ChoiceOption> options,
                                 bool include_none, const ChoiceTemplates& templates = {},
                                 const OptionRendering& rendering = {});

std::optional<std::string> parse_choice(std::string_view raw, const ChoicePrompt& cp);

struct CrsConfig {
  std::size_t k = kDefaultTopK;
  double nms_threshold = kDefaultNmsThreshold;
  bool include_none = true;
  ChoiceTemplates templates;
};

Prediction run_crs(const RecTask& task, const BackendBundle& backends, const CrsConfig& cfg);

struct TuningSample {
  std::string task_id;
  std::string image;
  std::string expression;
  std::vector<ChoiceOption> options;  // shuffled real options, then None
  std::string answer;
  std::string prompt;
  bool from_positive = true;
};

struct ExportConfig {
  std::size_t positives = 10'000;
  std::size_t negatives = 2'500;
  std::size_t k = kDefaultTopK;
  double nms_threshold = kDefaultNmsThreshold;
  bool include_none = true;
  std::uint64_t seed = 0;
  ChoiceTemplates templates;
};

struct ExportResult {
  std::vector<TuningSample> samples;  // in task-set order
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t backend_errors = 0;
  std::vector<std::string> warnings;
};

// Builds multi-choice tuning samples. Tasks are visited in a seeded order;
// a positive qualifies when one of its top-k candidates has IoU > 0.5 with
// the ground truth, and its options are shuffled with an RNG seeded from
// (seed, task id). Negatives answer the None label.
ExportResult export_tuning(const TaskSet& ts, Grounder& grounder, const ExportConfig& cfg);

Json tuning_sample_to_json(const TuningSample& s);
void write_tuning(std::ostream& out, std::span<const TuningSample> samples);

// Deterministic permutation utilities shared by the exporter and tests.
// Seeds an mt19937_64 from the SHA-256 of (seed, salt).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt);
// In-place Fisher-Yates with an explicit, portable draw.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

}  // namespace recollab
