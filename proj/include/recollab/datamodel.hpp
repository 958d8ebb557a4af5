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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "recollab/geometry.hpp"

namespace recollab {

using Json = nlohmann::ordered_json;

enum class Polarity { Positive, NegativeExpression, NegativeImage };
enum class Difficulty { L1, L2, L3 };
enum class NegativeEdit { Replace, Swap, Flip };
enum class NegativeFacet { Object, Attribute, Relation };
// L1: the edit touches the target itself; L2: another object in the
// expression.
enum class NegativeLocus { L1, L2 };
enum class Split { Train, Val, Test };

std::string_view to_string(Polarity p);
std::string_view to_string(Difficulty d);
std::string_view to_string(NegativeEdit e);
std::string_view to_string(NegativeFacet f);
std::string_view to_string(NegativeLocus l);
std::string_view to_string(Split s);

std::optional<Polarity> parse_polarity(std::string_view s);
std::optional<Difficulty> parse_difficulty(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

struct NegativeKind {
  NegativeEdit edit = NegativeEdit::Replace;
  NegativeFacet facet = NegativeFacet::Object;
  NegativeLocus locus = NegativeLocus::L1;

  // "replace/object/L1"
  std::string key() const;
  friend bool operator==(const NegativeKind&, const NegativeKind&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct RecTask {
  std::string id;
  std::string image;
  std::string expression;
  Polarity polarity = Polarity::Positive;
  std::optional<Difficulty> difficulty;
  std::optional<NegativeKind> negative_kind;
  std::optional<BBox> gt_box;
  std::optional<std::string> paired_positive;
  // Needed only by backends that speak normalized coordinates.
  std::optional<ImageSize> image_size;
  // Unknown record fields, kept in input order and written back after the
  // known ones.
  Json extra = Json::object();

  bool is_positive() const { return polarity == Polarity::Positive; }
};

// Schema or invariant violation while loading annotations.
class DataError : public std::runtime_error {
 public:
  DataError(std::string message, std::optional<std::size_t> line,
            std::optional<std::string> task_id);

  const std::string& reason() const { return reason_; }
  const std::optional<std::size_t>& line() const { return line_; }
  const std::optional<std::string>& task_id() const { return task_id_; }

 private:
  std::string reason_;
  std::optional<std::size_t> line_;
  std::optional<std::string> task_id_;
};

// Immutable after construction.
class TaskSet {
 public:
  TaskSet() = default;
  // Validates cross-record invariants; throws DataError.
  TaskSet(Split split, std::vector<RecTask> tasks);

  Split split() const { return split_; }
  const std::vector<RecTask>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  bool empty() const { return tasks_.empty(); }
  const RecTask* find(std::string_view id) const;

 private:
  Split split_ = Split::Test;
  std::vector<RecTask> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EvalPair {
  const RecTask* positive = nullptr;
  const RecTask* negative = nullptr;
};

// Record-level codec. parse_task checks per-record invariants.
RecTask parse_task(const Json& record);
Json task_to_json(const RecTask& task);

Json box_to_json(const BBox& box);
BBox box_from_json(const Json& j);

TaskSet parse_taskset(std::istream& in, Split split);
TaskSet load_taskset(const std::filesystem::path& path, Split split);
void write_taskset(std::ostream& out, const TaskSet& ts);
void save_taskset(const std::filesystem::path& path, const TaskSet& ts);

// Expected per-polarity counts; an absent entry is not checked.
struct ExpectedCounts {
  std::optional<std::size_t> positive;
  std::optional<std::size_t> negative_expression;
  std::optional<std::size_t> negative_image;
};

// Published split sizes of the FineCops-Ref benchmark.
ExpectedCounts finecops_ref_counts(Split split);

struct CountCheck {
  std::string name;
  std::size_t expected = 0;
  std::size_t actual = 0;
  long long delta = 0;  // actual - expected
  bool ok() const { return delta == 0; }
};

struct StatsReport {
  Split split = Split::Test;
  std::size_t total = 0;
  std::size_t positive = 0;
  std::size_t negative_expression = 0;
  std::size_t negative_image = 0;
  std::map<std::string, std::size_t> by_difficulty;     // "L1".."L3", "unlabeled"
  std::map<std::string, std::size_t> by_negative_kind;  // NegativeKind::key()
  std::vector<CountCheck> checks;
  bool pass = true;

  Json to_json() const;
  std::string render_text() const;
};

StatsReport validate_counts(const TaskSet& ts,
                            const std::optional<ExpectedCounts>& expected);

// One pair per non-positive task, in task order. Pointers stay valid for the
// lifetime of `ts`.
std::vector<EvalPair> pair_negatives(const TaskSet& ts);

}  // namespace recollab
