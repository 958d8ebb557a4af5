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

#include "recollab/datamodel.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace recollab {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<std::string_view, E>, N>& table,
                        std::string_view s) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table,
                         E value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, Polarity>, 3> kPolarities{{
    {"positive", Polarity::Positive},
    {"negative_expression", Polarity::NegativeExpression},
    {"negative_image", Polarity::NegativeImage},
}};
constexpr std::array<std::pair<std::string_view, Difficulty>, 3> kDifficulties{{
    {"L1", Difficulty::L1}, {"L2", Difficulty::L2}, {"L3", Difficulty::L3}}};
constexpr std::array<std::pair<std::string_view, NegativeEdit>, 3> kEdits{{
    {"replace", NegativeEdit::Replace},
    {"swap", NegativeEdit::Swap},
    {"flip", NegativeEdit::Flip}}};
constexpr std::array<std::pair<std::string_view, NegativeFacet>, 3> kFacets{{
    {"object", NegativeFacet::Object},
    {"attribute", NegativeFacet::Attribute},
    {"relation", NegativeFacet::Relation}}};
constexpr std::array<std::pair<std::string_view, NegativeLocus>, 2> kLoci{{
    {"L1", NegativeLocus::L1}, {"L2", NegativeLocus::L2}}};
constexpr std::array<std::pair<std::string_view, Split>, 3> kSplits{{
    {"train", Split::Train}, {"val", Split::Val}, {"test", Split::Test}}};

const std::unordered_set<std::string_view>& known_fields() {
  static const std::unordered_set<std::string_view> fields{
      "id",     "image",          "expression", "polarity",        "difficulty",
      "negative_kind", "gt_box",  "paired_positive", "image_size"};
  return fields;
}

std::string required_string(const Json& rec, const char* field) {
  auto it = rec.find(field);
  if (it == rec.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("missing or non-string field '") +
                                field + "'");
  }
  return it->get<std::string>();
}

NegativeKind parse_negative_kind(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("negative_kind must be an object");
  auto field = [&](const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
      throw std::invalid_argument(std::string("negative_kind.") + name +
                                  " missing");
    }
    return it->get<std::string>();
  };
  auto edit = lookup(kEdits, field("edit"));
  auto facet = lookup(kFacets, field("facet"));
  auto locus = lookup(kLoci, field("locus"));
  if (!edit || !facet || !locus) {
    throw std::invalid_argument("negative_kind has an unknown value");
  }
  return NegativeKind{*edit, *facet, *locus};
}

void check_record_invariants(const RecTask& t) {
  auto fail = [&](const std::string& why) {
    throw DataError(why, std::nullopt, t.id);
  };
  if (t.id.empty()) fail("empty id");
  if (t.is_positive()) {
    if (!t.gt_box) fail("positive task without gt_box");
    if (t.paired_positive) fail("positive task with paired_positive");
    if (t.negative_kind) fail("positive task with negative_kind");
  } else {
    if (t.gt_box) fail("negative task with gt_box");
    if (!t.paired_positive) fail("negative task without paired_positive");
    if (!t.negative_kind) fail("negative task without negative_kind");
    if (t.negative_kind->edit == NegativeEdit::Flip &&
        t.polarity != Polarity::NegativeImage) {
      fail("flip edit outside a negative_image task");
    }
  }
  if (t.image_size && (t.image_size->width <= 0 || t.image_size->height <= 0)) {
    fail("non-positive image_size");
  }
}

}  // namespace

std::string_view to_string(Polarity p) { return name_of(kPolarities, p); }
std::string_view to_string(Difficulty d) { return name_of(kDifficulties, d); }
std::string_view to_string(NegativeEdit e) { return name_of(kEdits, e); }
std::string_view to_string(NegativeFacet f) { return name_of(kFacets, f); }
std::string_view to_string(NegativeLocus l) { return name_of(kLoci, l); }
std::string_view to_string(Split s) { return name_of(kSplits, s); }

std::optional<Polarity> parse_polarity(std::string_view s) { return lookup(kPolarities, s); }
std::optional<Difficulty> parse_difficulty(std::string_view s) { return lookup(kDifficulties, s); }
std::optional<Split> parse_split(std::string_view s) { return lookup(kSplits, s); }

std::string NegativeKind::key() const {
  std::string k;
  k += to_string(edit);
  k += '/';
  k += to_string(facet);
  k += '/';
  k += to_string(locus);
  return k;
}

DataError::DataError(std::string message, std::optional<std::size_t> line,
                     std::optional<std::string> task_id)
    : std::runtime_error([&] {
        std::string m;
        if (line) m += "line " + std::to_string(*line) + ": ";
        if (task_id) m += "task '" + *task_id + "': ";
        return m + message;
      }()),
      reason_(message),
      line_(line),
      task_id_(std::move(task_id)) {}

Json box_to_json(const BBox& box) {
  return Json::array({box.x0(), box.y0(), box.x1(), box.y1()});
}

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::invalid_argument("box must be an array of 4 numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument("box must be an array of 4 numbers");
  }
  return BBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>());
}

RecTask parse_task(const Json& rec) {
  if (!rec.is_object()) throw std::invalid_argument("record is not an object");
  RecTask t;
  t.id = required_string(rec, "id");
  try {
    t.image = required_string(rec, "image");
    t.expression = required_string(rec, "expression");
    auto pol = parse_polarity(required_string(rec, "polarity"));
    if (!pol) throw std::invalid_argument("unknown polarity");
    t.polarity = *pol;
    if (auto it = rec.find("difficulty"); it != rec.end() && !it->is_null()) {
      auto d = it->is_string() ? parse_difficulty(it->get<std::string>()) : std::nullopt;
      if (!d) throw std::invalid_argument("unknown difficulty");
      t.difficulty = d;
    }
    if (auto it = rec.find("negative_kind"); it != rec.end() && !it->is_null()) {
      t.negative_kind = parse_negative_kind(*it);
    }
    if (auto it = rec.find("gt_box"); it != rec.end() && !it->is_null()) {
      t.gt_box = box_from_json(*it);
    }
    if (auto it = rec.find("paired_positive"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) throw std::invalid_argument("paired_positive must be a string");
      t.paired_positive = it->get<std::string>();
    }
    if (auto it = rec.find("image_size"); it != rec.end() && !it->is_null()) {
      if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
          !(*it)[1].is_number_integer()) {
        throw std::invalid_argument("image_size must be [width, height]");
      }
      t.image_size = ImageSize{(*it)[0].get<int>(), (*it)[1].get<int>()};
    }
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what(), std::nullopt, t.id);
  } catch (const Json::exception& e) {
    throw DataError(e.what(), std::nullopt, t.id);
  }
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    if (!known_fields().contains(it.key())) t.extra[it.key()] = it.value();
  }
  check_record_invariants(t);
  return t;
}

Json task_to_json(const RecTask& t) {
  Json j = Json::object();
  j["id"] = t.id;
  j["image"] = t.image;
  j["expression"] = t.expression;
  j["polarity"] = std::string(to_string(t.polarity));
  if (t.difficulty) j["difficulty"] = std::string(to_string(*t.difficulty));
  if (t.negative_kind) {
    j["negative_kind"] = Json{{"edit", std::string(to_string(t.negative_kind->edit))},
                              {"facet", std::string(to_string(t.negative_kind->facet))},
                              {"locus", std::string(to_string(t.negative_kind->locus))}};
  }
  if (t.gt_box) j["gt_box"] = box_to_json(*t.gt_box);
  if (t.paired_positive) j["paired_positive"] = *t.paired_positive;
  if (t.image_size) j["image_size"] = Json::array({t.image_size->width, t.image_size->height});
  for (auto it = t.extra.begin(); it != t.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

TaskSet::TaskSet(Split split, std::vector<RecTask> tasks)
    : split_(split), tasks_(std::move(tasks)) {
  index_.reserve(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!index_.emplace(tasks_[i].id, i).second) {
      throw DataError("duplicate id", std::nullopt, tasks_[i].id);
    }
  }
  for (const auto& t : tasks_) {
    if (!t.paired_positive) continue;
    const RecTask* pos = find(*t.paired_positive);
    if (pos == nullptr) {
      throw DataError("dangling paired_positive '" + *t.paired_positive + "'",
                      std::nullopt, t.id);
    }
    if (!pos->is_positive()) {
      throw DataError("paired_positive '" + *t.paired_positive +
                          "' is not a positive task",
                      std::nullopt, t.id);
    }
  }
}

const RecTask* TaskSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &tasks_[it->second];
}

TaskSet parse_taskset(std::istream& in, Split split) {
  std::vector<RecTask> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(std::string("malformed record: ") + e.what(), lineno, std::nullopt);
    }
    try {
      tasks.push_back(parse_task(rec));
    } catch (const DataError& e) {
      throw DataError(e.reason(), lineno, e.task_id());
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), lineno, std::nullopt);
    }
  }
  return TaskSet(split, std::move(tasks));
}

TaskSet load_taskset(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open annotation file " + path.string(), std::nullopt, std::nullopt);
  return parse_taskset(in, split);
}

void write_taskset(std::ostream& out, const TaskSet& ts) {
  for (const auto& t : ts.tasks()) out << task_to_json(t).dump() << '\n';
}

void save_taskset(const std::filesystem::path& path, const TaskSet& ts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_taskset(out, ts);
}

ExpectedCounts finecops_ref_counts(Split split) {
  switch (split) {
    case Split::Train:
      return {163'792, 80'451, std::nullopt};
    case Split::Val:
      return {18'455, 9'029, std::nullopt};
    case Split::Test:
      return {9'605, 9'814, 8'507};
  }
  return {};
}

StatsReport validate_counts(const TaskSet& ts,
                            const std::optional<ExpectedCounts>& expected) {
  StatsReport r;
  r.split = ts.split();
  r.total = ts.size();
  for (const auto& t : ts.tasks()) {
    switch (t.polarity) {
      case Polarity::Positive: ++r.positive; break;
      case Polarity::NegativeExpression: ++r.negative_expression; break;
      case Polarity::NegativeImage: ++r.negative_image; break;
    }
    const std::string level = t.difficulty ? std::string(to_string(*t.difficulty)) : "unlabeled";
    ++r.by_difficulty[level];
    if (t.negative_kind) ++r.by_negative_kind[t.negative_kind->key()];
  }
  if (expected) {
    auto check = [&](const char* name, const std::optional<std::size_t>& want,
                     std::size_t got) {
      if (!want) return;
      CountCheck c{name, *want, got,
                   static_cast<long long>(got) - static_cast<long long>(*want)};
      r.pass = r.pass && c.ok();
      r.checks.push_back(c);
    };
    check("positive", expected->positive, r.positive);
    check("negative_expression", expected->negative_expression, r.negative_expression);
    check("negative_image", expected->negative_image, r.negative_image);
  }
  return r;
}

Json StatsReport::to_json() const {
  Json j;
  j["split"] = std::string(to_string(split));
  j["total"] = total;
  j["positive"] = positive;
  j["negative_expression"] = negative_expression;
  j["negative_image"] = negative_image;
  j["by_difficulty"] = Json::object();
  for (const auto& [k, v] : by_difficulty) j["by_difficulty"][k] = v;
  j["by_negative_kind"] = Json::object();
  for (const auto& [k, v] : by_negative_kind) j["by_negative_kind"][k] = v;
  j["checks"] = Json::array();
  for (const auto& c : checks) {
    j["checks"].push_back(Json{{"name", c.name},
                               {"expected", c.expected},
                               {"actual", c.actual},
                               {"delta", c.delta},
                               {"ok", c.ok()}});
  }
  j["pass"] = pass;
  return j;
}

std::string StatsReport::render_text() const {
  std::ostringstream os;
  os << "split " << to_string(split) << ": " << total << " tasks\n";
  auto row = [&](const std::string& name, std::size_t n) {
    os << "  " << std::left << std::setw(28) << name << std::right << std::setw(9) << n << '\n';
  };
  row("positive", positive);
  row("negative_expression", negative_expression);
  row("negative_image", negative_image);
  for (const auto& [k, v] : by_difficulty) row("difficulty " + k, v);
  for (const auto& [k, v] : by_negative_kind) row("negative " + k, v);
  for (const auto& c : checks) {
    os << "  check " << std::left << std::setw(22) << c.name << std::right
       << " expected " << c.expected << " actual " << c.actual;
    if (!c.ok()) os << " delta " << (c.delta > 0 ? "+" : "") << c.delta;
    os << (c.ok() ? "  ok" : "  MISMATCH") << '\n';
  }
  os << (pass ? "PASS" : "FAIL") << '\n';
  return os.str();
}

std::vector<EvalPair> pair_negatives(const TaskSet& ts) {
  std::vector<EvalPair> pairs;
  for (const auto& t : ts.tasks()) {
    if (t.is_positive()) continue;
    pairs.push_back(EvalPair{ts.find(*t.paired_positive), &t});
  }
  return pairs;
}

}  // namespace recollab
