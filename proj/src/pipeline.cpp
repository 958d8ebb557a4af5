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

#include "recollab/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "recollab/crs.hpp"
#include "recollab/sfa.hpp"

namespace recollab {

Prediction run_task(PipelineKind pipeline, const RecTask& task, const BackendBundle& backends,
                    const RunConfig& cfg) {
  switch (pipeline) {
    case PipelineKind::Specialist: return run_specialist(task, backends, cfg.sfa);
    case PipelineKind::Mllm: return run_mllm(task, backends, cfg.sfa);
    case PipelineKind::Sfa: return run_sfa(task, backends, cfg.sfa);
    case PipelineKind::Crs: return run_crs(task, backends, cfg.crs);
  }
  throw std::logic_error("unknown pipeline");
}

LogContents read_prediction_log(const std::filesystem::path& path) {
  LogContents out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::uintmax_t offset = 0;
  while (std::getline(in, line)) {
    if (in.eof()) {
      // No trailing newline: a record torn by a crash.
      out.truncated_tail = true;
      break;
    }
    try {
      out.predictions.push_back(prediction_from_json(Json::parse(line)));
    } catch (const std::exception&) {
      out.truncated_tail = true;
      break;
    }
    offset += line.size() + 1;
  }
  out.valid_bytes = offset;
  return out;
}

RunOutcome run_pipeline(const TaskSet& ts, const BackendBundle& backends, const RunConfig& cfg,
                        const std::filesystem::path& log_path, const RunOptions& opts) {
  RunOutcome outcome;
  LogContents existing = read_prediction_log(log_path);
  if (existing.truncated_tail) {
    spdlog::warn("prediction log {}: dropping torn tail after {} bytes", log_path.string(),
                 existing.valid_bytes);
    std::filesystem::resize_file(log_path, existing.valid_bytes);
  }
  std::unordered_map<std::string, Prediction> done;
  for (auto& p : existing.predictions) done.emplace(p.task_id, std::move(p));

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!done.contains(ts.tasks()[i].id)) todo.push_back(i);
  }
  outcome.resumed = ts.size() - todo.size();
  if (outcome.resumed > 0) spdlog::info("resuming: {} task(s) already logged", outcome.resumed);

  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  std::ofstream log(log_path, std::ios::binary | std::ios::app);
  if (!log) throw std::runtime_error("cannot open prediction log " + log_path.string());

  std::vector<std::optional<Prediction>> slots(todo.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1)) {
      Prediction p = run_task(cfg.pipeline, ts.tasks()[todo[i]], backends, cfg);
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(p);
      }
      ready.notify_all();
    }
  };

  const int n_workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(todo.size())));
  std::vector<std::jthread> pool;
  if (!todo.empty()) {
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  // Single writer: commit records strictly in task order.
  std::size_t written = 0;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    Prediction p;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      p = std::move(*slots[i]);
      slots[i].reset();
    }
    const std::string record = prediction_to_json(p).dump();
    if (opts.abort_after && written == *opts.abort_after) {
      if (opts.abort_torn) log << record.substr(0, record.size() / 2);
      log.flush();
      std::_Exit(3);
    }
    log << record << '\n';
    log.flush();
    ++written;
    done.emplace(p.task_id, std::move(p));
  }
  pool.clear();
  outcome.executed = written;

  outcome.predictions.reserve(ts.size());
  for (const auto& t : ts.tasks()) {
    auto it = done.find(t.id);
    if (it == done.end()) continue;
    if (it->second.error) ++outcome.failures;
    outcome.predictions.push_back(it->second);
  }
  return outcome;
}

EvalReport report_for_run(const TaskSet& ts, std::span<const Prediction> predictions,
                          const RunConfig& cfg) {
  ReportInputs in;
  in.tasks = &ts;
  in.predictions = predictions;
  in.ks = cfg.ks;
  in.meta = RunMetadata{std::string(to_string(cfg.pipeline)), cfg.source_hash, cfg.seed,
                        cfg.cost_provenance};
  if (cfg.reference_role) {
    auto it = cfg.backends.find(*cfg.reference_role);
    if (it != cfg.backends.end() && it->second.cost_units > 0.0) {
      in.reference_unit_cost = it->second.cost_units;
    }
  }
  return build_report(in);
}

}  // namespace recollab
