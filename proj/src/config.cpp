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

#include "recollab/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "recollab/hashing.hpp"
#include "recollab/replay.hpp"

namespace recollab {

std::string_view to_string(PipelineKind k) {
  switch (k) {
    case PipelineKind::Specialist: return "specialist";
    case PipelineKind::Mllm: return "mllm";
    case PipelineKind::Sfa: return "sfa";
    case PipelineKind::Crs: return "crs";
  }
  return "?";
}

std::optional<PipelineKind> parse_pipeline(std::string_view s) {
  for (auto k : {PipelineKind::Specialist, PipelineKind::Mllm, PipelineKind::Sfa, PipelineKind::Crs}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
  }
}

template <typename T>
T get(const Json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

BackendConfig parse_backend(Role role, const Json& j, const std::filesystem::path& base) {
  const std::string where = "backends." + std::string(to_string(role));
  reject_unknown(j,
                 {"kind", "endpoint", "fixture_dir", "timeout_s", "retries", "backoff_ms",
                  "concurrency", "coordinates", "coordinate_scale", "cost_units", "bearer_token",
                  "send_image", "parameters"},
                 where);
  BackendConfig b;
  const std::string kind = get<std::string>(j, "kind", "replay", where);
  if (kind == "replay") b.kind = BackendKind::Replay;
  else if (kind == "http") b.kind = BackendKind::Http;
  else if (kind == "heuristic") b.kind = BackendKind::Heuristic;
  else throw ConfigError(where + ".kind must be http, replay or heuristic");
  b.endpoint = get<std::string>(j, "endpoint", "", where);
  if (auto dir = get<std::string>(j, "fixture_dir", "", where); !dir.empty()) {
    b.fixture_dir = resolve(base, dir);
  }
  b.timeout = std::chrono::milliseconds(
      static_cast<long long>(1000.0 * get<double>(j, "timeout_s", 60.0, where)));
  b.retries = get<int>(j, "retries", 2, where);
  b.backoff = std::chrono::milliseconds(get<long long>(j, "backoff_ms", 500, where));
  b.concurrency = get<int>(j, "concurrency", 8, where);
  const std::string coords = get<std::string>(j, "coordinates", "pixel", where);
  if (coords == "pixel") b.frame.convention = CoordinateFrame::Convention::Pixel;
  else if (coords == "normalized") b.frame.convention = CoordinateFrame::Convention::Normalized;
  else throw ConfigError(where + ".coordinates must be pixel or normalized");
  b.frame.scale = get<double>(j, "coordinate_scale", 1000.0, where);
  b.cost_units = get<double>(j, "cost_units", 0.0, where);
  b.bearer_token = get<std::string>(j, "bearer_token", "", where);
  const std::string send = get<std::string>(j, "send_image", "path", where);
  if (send != "path" && send != "base64") throw ConfigError(where + ".send_image must be path or base64");
  b.send_image_base64 = send == "base64";
  if (auto it = j.find("parameters"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ConfigError(where + ".parameters must be an object");
    b.parameters = *it;
  }
  return b;
}

}  // namespace

RunConfig parse_config(const Json& j, const std::filesystem::path& base) {
  reject_unknown(j,
                 {"datasets", "pipeline", "seed", "output_dir", "workers", "ks", "validate",
                  "backends", "sfa", "crs", "export", "cost"},
                 "config");
  RunConfig cfg;
  if (auto it = j.find("datasets"); it != j.end()) {
    reject_unknown(*it, {"train", "val", "test"}, "datasets");
    for (auto d = it->begin(); d != it->end(); ++d) {
      cfg.datasets[*parse_split(d.key())] = resolve(base, d.value().get<std::string>());
    }
  }
  const std::string pipeline = get<std::string>(j, "pipeline", "sfa", "config");
  auto kind = parse_pipeline(pipeline);
  if (!kind) throw ConfigError("unknown pipeline '" + pipeline + "' (specialist, mllm, sfa, crs)");
  cfg.pipeline = *kind;
  cfg.seed = get<std::uint64_t>(j, "seed", 0, "config");
  cfg.output_dir = resolve(base, get<std::string>(j, "output_dir", "out", "config"));
  cfg.workers = get<int>(j, "workers", 8, "config");
  cfg.ks = get<std::vector<std::size_t>>(j, "ks", {1}, "config");

  if (auto it = j.find("validate"); it != j.end()) {
    reject_unknown(*it, {"expected"}, "validate");
    cfg.expected_counts = get<std::string>(*it, "expected", "none", "validate");
    if (cfg.expected_counts != "none" && cfg.expected_counts != "finecops-ref") {
      throw ConfigError("validate.expected must be none or finecops-ref");
    }
  }

  if (auto it = j.find("backends"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("backends must be an object");
    for (auto b = it->begin(); b != it->end(); ++b) {
      auto role = parse_role(b.key());
      if (!role) throw ConfigError("unknown backend role '" + b.key() + "'");
      cfg.backends[*role] = parse_backend(*role, b.value(), base);
    }
  }
  if (!cfg.backends.contains(Role::Extractor)) {
    BackendConfig h;
    h.kind = BackendKind::Heuristic;
    cfg.backends[Role::Extractor] = h;
  }

  if (auto it = j.find("sfa"); it != j.end()) {
    reject_unknown(*it, {"threshold", "focus", "force", "base_prompt", "focus_suffix"}, "sfa");
    cfg.sfa.threshold = get<double>(*it, "threshold", kDefaultRouteThreshold, "sfa");
    cfg.sfa.focus = get<bool>(*it, "focus", true, "sfa");
    const std::string force = get<std::string>(*it, "force", "none", "sfa");
    if (force == "none") cfg.sfa.force = SfaConfig::Force::None;
    else if (force == "fast") cfg.sfa.force = SfaConfig::Force::Fast;
    else if (force == "slow") cfg.sfa.force = SfaConfig::Force::Slow;
    else throw ConfigError("sfa.force must be none, fast or slow");
    cfg.sfa.base_prompt = get<std::string>(*it, "base_prompt", cfg.sfa.base_prompt, "sfa");
    cfg.sfa.focus_suffix = get<std::string>(*it, "focus_suffix", cfg.sfa.focus_suffix, "sfa");
  }
  if (auto it = j.find("crs"); it != j.end()) {
    reject_unknown(*it,
                   {"k", "nms_threshold", "include_none", "question", "none_instruction",
                    "answer_instruction"},
                   "crs");
    cfg.crs.k = get<std::size_t>(*it, "k", kDefaultTopK, "crs");
    cfg.crs.nms_threshold = get<double>(*it, "nms_threshold", kDefaultNmsThreshold, "crs");
    cfg.crs.include_none = get<bool>(*it, "include_none", true, "crs");
    auto& t = cfg.crs.templates;
    t.question = get<std::string>(*it, "question", t.question, "crs");
    t.none_instruction = get<std::string>(*it, "none_instruction", t.none_instruction, "crs");
    t.answer_instruction = get<std::string>(*it, "answer_instruction", t.answer_instruction, "crs");
  }
  if (auto it = j.find("export"); it != j.end()) {
    reject_unknown(*it, {"positives", "negatives", "split", "output"}, "export");
    cfg.export_settings.positives = get<std::size_t>(*it, "positives", 10'000, "export");
    cfg.export_settings.negatives = get<std::size_t>(*it, "negatives", 2'500, "export");
    const std::string split = get<std::string>(*it, "split", "train", "export");
    auto s = parse_split(split);
    if (!s) throw ConfigError("export.split must be train, val or test");
    cfg.export_settings.split = *s;
    cfg.export_settings.output = get<std::string>(*it, "output", "tuning.jsonl", "export");
  }
  if (auto it = j.find("cost"); it != j.end()) {
    reject_unknown(*it, {"reference_role", "provenance"}, "cost");
    const std::string ref = get<std::string>(*it, "reference_role", "mllm", "cost");
    if (ref == "none") {
      cfg.reference_role.reset();
    } else {
      cfg.reference_role = parse_role(ref);
      if (!cfg.reference_role) throw ConfigError("cost.reference_role must name a backend role or none");
    }
    cfg.cost_provenance = get<std::string>(*it, "provenance", cfg.cost_provenance, "cost");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig cfg = parse_config(j, path.parent_path());
  cfg.source_hash = sha256_hex(bytes);
  return cfg;
}

void apply_env_overrides(RunConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  for (auto& [role, b] : cfg.backends) {
    std::string prefix = "RECOLLAB_";
    for (char c : to_string(role)) prefix.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (auto v = getenv(prefix + "_ENDPOINT")) {
      b.endpoint = *v;
      b.kind = BackendKind::Http;
    }
    if (auto v = getenv(prefix + "_TOKEN")) b.bearer_token = *v;
  }
}

void apply_env_overrides(RunConfig& cfg) {
  apply_env_overrides(cfg, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  });
}

std::vector<Role> required_roles(const RunConfig& cfg) {
  std::vector<Role> roles;
  switch (cfg.pipeline) {
    case PipelineKind::Specialist:
      roles = {Role::Grounder};
      if (cfg.sfa.focus) roles.push_back(Role::Extractor);
      break;
    case PipelineKind::Mllm:
      roles = {Role::Mllm};
      if (cfg.sfa.focus) roles.push_back(Role::Extractor);
      break;
    case PipelineKind::Sfa:
      roles = {Role::Extractor, Role::Detector, Role::Grounder, Role::Mllm};
      break;
    case PipelineKind::Crs:
      roles = {Role::Grounder, Role::Selector};
      break;
  }
  return roles;
}

void validate_config(const RunConfig& cfg, bool for_export) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(cfg.sfa.threshold)) throw ConfigError("sfa.threshold must lie in [0,1]");
  if (!in_unit(cfg.crs.nms_threshold)) throw ConfigError("crs.nms_threshold must lie in [0,1]");
  if (cfg.crs.k < 1) throw ConfigError("crs.k must be >= 1");
  if (cfg.crs.k + (cfg.crs.include_none ? 1 : 0) > 26) throw ConfigError("crs.k too large for letter labels");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.ks.empty()) throw ConfigError("ks must list at least one k");
  for (auto k : cfg.ks) {
    if (k < 1) throw ConfigError("every entry of ks must be >= 1");
  }
  const Split split = for_export ? cfg.export_settings.split : Split::Test;
  auto ds = cfg.datasets.find(split);
  if (ds == cfg.datasets.end()) {
    throw ConfigError("no dataset configured for split '" + std::string(to_string(split)) + "'");
  }
  for (const auto& [s, path] : cfg.datasets) {
    if (!std::filesystem::exists(path)) throw ConfigError("dataset not found: " + path.string());
  }
  const std::vector<Role> roles = for_export ? std::vector<Role>{Role::Grounder} : required_roles(cfg);
  for (Role role : roles) {
    auto it = cfg.backends.find(role);
    if (it == cfg.backends.end()) {
      throw ConfigError("pipeline needs a '" + std::string(to_string(role)) + "' backend");
    }
  }
  for (const auto& [role, b] : cfg.backends) {
    const std::string where = "backends." + std::string(to_string(role));
    if (b.concurrency < 1) throw ConfigError(where + ".concurrency must be >= 1");
    if (b.retries < 0) throw ConfigError(where + ".retries must be >= 0");
    if (b.frame.scale <= 0.0) throw ConfigError(where + ".coordinate_scale must be positive");
    if (b.kind == BackendKind::Replay) {
      if (b.fixture_dir.empty()) throw ConfigError(where + ".fixture_dir is required for replay");
      if (!std::filesystem::exists(fixture_path(b.fixture_dir, role))) {
        throw ConfigError(where + ": fixture file not found: " + fixture_path(b.fixture_dir, role).string());
      }
    }
    if (b.kind == BackendKind::Http && b.endpoint.empty()) {
      throw ConfigError(where + ".endpoint is required for http");
    }
  }
}

ExportConfig export_config(const RunConfig& cfg) {
  ExportConfig e;
  e.positives = cfg.export_settings.positives;
  e.negatives = cfg.export_settings.negatives;
  e.k = cfg.crs.k;
  e.nms_threshold = cfg.crs.nms_threshold;
  e.include_none = cfg.crs.include_none;
  e.seed = cfg.seed;
  e.templates = cfg.crs.templates;
  return e;
}

}  // namespace recollab
