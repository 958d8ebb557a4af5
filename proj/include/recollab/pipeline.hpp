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
#include <optional>
#include <span>
#include <vector>

#include "recollab/backends.hpp"
#include "recollab/config.hpp"
#include "recollab/datamodel.hpp"
#include "recollab/metrics.hpp"
#include "recollab/prediction.hpp"

namespace recollab {

Prediction run_task(PipelineKind pipeline, const RecTask& task, const BackendBundle& backends,
                    const RunConfig& cfg);

struct LogContents {
  std::vector<Prediction> predictions;
  // Length of the prefix made of complete, parseable records.
  std::uintmax_t valid_bytes = 0;
  bool truncated_tail = false;
};

// Reads a prediction log, stopping at the first torn or unparseable line.
LogContents read_prediction_log(const std::filesystem::path& path);

struct RunOptions {
  int workers = 8;
  // Test hook: terminate the process after this many records are written,
  // emulating a crash.
  std::optional<std::size_t> abort_after;
  // With abort_after: also leave half of the next record behind.
  bool abort_torn = false;
};

struct RunOutcome {
  std::vector<Prediction> predictions;  // task order, resumed records included
  std::size_t resumed = 0;
  std::size_t executed = 0;
  std::size_t failures = 0;
};

// Runs every task not yet in `log_path` on a pool of `workers` threads and
// appends records in task order, so a resumed run produces the same bytes
// as an uninterrupted one. A torn tail left by a crash is cut off first.
RunOutcome run_pipeline(const TaskSet& ts, const BackendBundle& backends, const RunConfig& cfg,
                        const std::filesystem::path& log_path, const RunOptions& opts);

EvalReport report_for_run(const TaskSet& ts, std::span<const Prediction> predictions,
                          const RunConfig& cfg);

}  // namespace recollab
