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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "recollab/backends.hpp"
#include "recollab/crs.hpp"
#include "recollab/datamodel.hpp"
#include "recollab/sfa.hpp"

namespace recollab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PipelineKind { Specialist, Mllm, Sfa, Crs };
std::string_view to_string(PipelineKind k);
std::optional<PipelineKind> parse_pipeline(std::string_view s);

struct ExportSettings {
  std::size_t positives = 10'000;
  std::size_t negatives = 2'500;
  Split split = Split::Train;
  std::filesystem::path output = "tuning.jsonl";  // relative to output_dir
};

struct RunConfig {
  std::map<Split, std::filesystem::path> datasets;
  PipelineKind pipeline = PipelineKind::Sfa;
  std::map<Role, BackendConfig> backends;
  SfaConfig sfa;
  CrsConfig crs;
  ExportSettings export_settings;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  int workers = 8;
  std::vector<std::size_t> ks{1};
  // "none" or "finecops-ref".
  std::string expected_counts = "none";
  std::optional<Role> reference_role = Role::Mllm;
  std::string cost_provenance =
      "per-call cost units configured per backend; not measured by the harness";
  // SHA-256 of the config file bytes.
  std::string source_hash;
};

// Every key is optional; a bare `{}` yields the defaults above. Relative
// paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// RECOLLAB_<ROLE>_ENDPOINT and RECOLLAB_<ROLE>_TOKEN override backend
// endpoints and bearer tokens.
void apply_env_overrides(RunConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv);
void apply_env_overrides(RunConfig& cfg);

// Roles the configured pipeline calls.
std::vector<Role> required_roles(const RunConfig& cfg);

// Range checks, required roles present, referenced paths exist. Throws
// ConfigError.
void validate_config(const RunConfig& cfg, bool for_export = false);

ExportConfig export_config(const RunConfig& cfg);

}  // namespace recollab
