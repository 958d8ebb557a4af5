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

#include "recollab/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

#include "recollab/config.hpp"
#include "recollab/crs.hpp"
#include "recollab/pipeline.hpp"

namespace recollab {

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> pipeline;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::string> train, val, test;
  std::optional<double> threshold;
  std::optional<bool> focus;
  std::optional<std::string> force;
  std::optional<std::size_t> k;
  std::optional<double> nms;
  std::optional<bool> include_none;
  std::vector<std::size_t> ks;
  std::optional<std::string> expected;
  std::optional<std::size_t> positives, negatives;
  std::optional<std::string> export_output;
  std::optional<std::string> log;
  std::optional<std::size_t> abort_after;
  bool abort_torn = false;
};

RunConfig effective_config(const Overrides& o) {
  RunConfig cfg = load_config(o.config_path);
  apply_env_overrides(cfg);
  if (o.pipeline) {
    auto k = parse_pipeline(*o.pipeline);
    if (!k) throw ConfigError("unknown pipeline '" + *o.pipeline + "' (specialist, mllm, sfa, crs)");
    cfg.pipeline = *k;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.workers) cfg.workers = *o.workers;
  if (o.train) cfg.datasets[Split::Train] = *o.train;
  if (o.val) cfg.datasets[Split::Val] = *o.val;
  if (o.test) cfg.datasets[Split::Test] = *o.test;
  if (o.threshold) cfg.sfa.threshold = *o.threshold;
  if (o.focus) cfg.sfa.focus = *o.focus;
  if (o.force) {
    if (*o.force == "none") cfg.sfa.force = SfaConfig::Force::None;
    else if (*o.force == "fast") cfg.sfa.force = SfaConfig::Force::Fast;
    else if (*o.force == "slow") cfg.sfa.force = SfaConfig::Force::Slow;
    else throw ConfigError("--force must be none, fast or slow");
  }
  if (o.k) cfg.crs.k = *o.k;
  if (o.nms) cfg.crs.nms_threshold = *o.nms;
  if (o.include_none) cfg.crs.include_none = *o.include_none;
  if (!o.ks.empty()) cfg.ks = o.ks;
  if (o.expected) cfg.expected_counts = *o.expected;
  if (o.positives) cfg.export_settings.positives = *o.positives;
  if (o.negatives) cfg.export_settings.negatives = *o.negatives;
  if (o.export_output) cfg.export_settings.output = *o.export_output;
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_report(const EvalReport& report, const RunConfig& cfg) {
  write_text(cfg.output_dir / "report.json", report.to_json().dump(2) + "\n");
  const std::string text = report.render_text();
  write_text(cfg.output_dir / "report.txt", text);
  std::cout << text;
}

int cmd_validate(const Overrides& o) {
  RunConfig cfg = effective_config(o);
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  bool all_pass = true;
  for (const auto& [split, path] : cfg.datasets) {
    if (!std::filesystem::exists(path)) throw ConfigError("dataset not found: " + path.string());
    const TaskSet ts = load_taskset(path, split);
    std::optional<ExpectedCounts> expected;
    if (cfg.expected_counts == "finecops-ref") expected = finecops_ref_counts(split);
    const StatsReport stats = validate_counts(ts, expected);
    std::cout << stats.render_text();
    write_text(cfg.output_dir / ("stats_" + std::string(to_string(split)) + ".json"),
               stats.to_json().dump(2) + "\n");
    if (split == Split::Test || !pair_negatives(ts).empty()) {
      std::cout << "  eval pairs " << pair_negatives(ts).size() << '\n';
    }
    all_pass = all_pass && stats.pass;
  }
  return all_pass ? kExitOk : kExitTaskFailures;
}

int cmd_run(const Overrides& o) {
  RunConfig cfg = effective_config(o);
  validate_config(cfg);
  const TaskSet ts = load_taskset(cfg.datasets.at(Split::Test), Split::Test);
  const BackendBundle backends = make_bundle(cfg.backends);
  RunOptions opts;
  opts.workers = cfg.workers;
  opts.abort_after = o.abort_after;
  opts.abort_torn = o.abort_torn;
  const auto log_path = o.log ? std::filesystem::path(*o.log) : cfg.output_dir / "predictions.jsonl";
  const RunOutcome outcome = run_pipeline(ts, backends, cfg, log_path, opts);
  spdlog::info("{} task(s) run, {} resumed, {} failure(s)", outcome.executed, outcome.resumed,
               outcome.failures);
  write_report(report_for_run(ts, outcome.predictions, cfg), cfg);
  return outcome.failures > 0 ? kExitTaskFailures : kExitOk;
}

int cmd_report(const Overrides& o) {
  RunConfig cfg = effective_config(o);
  auto ds = cfg.datasets.find(Split::Test);
  if (ds == cfg.datasets.end()) throw ConfigError("no test dataset configured");
  const TaskSet ts = load_taskset(ds->second, Split::Test);
  const auto log_path = o.log ? std::filesystem::path(*o.log) : cfg.output_dir / "predictions.jsonl";
  if (!std::filesystem::exists(log_path)) throw ConfigError("prediction log not found: " + log_path.string());
  const LogContents log = read_prediction_log(log_path);
  if (log.truncated_tail) spdlog::warn("prediction log has a torn tail; ignoring it");
  write_report(report_for_run(ts, log.predictions, cfg), cfg);
  const bool failures = std::any_of(log.predictions.begin(), log.predictions.end(),
                                    [](const Prediction& p) { return p.error.has_value(); });
  return failures ? kExitTaskFailures : kExitOk;
}

int cmd_export(const Overrides& o) {
  RunConfig cfg = effective_config(o);
  validate_config(cfg, /*for_export=*/true);
  const Split split = cfg.export_settings.split;
  if (split != Split::Train) spdlog::warn("exporting tuning data from the {} split", to_string(split));
  const TaskSet ts = load_taskset(cfg.datasets.at(split), split);
  std::map<Role, BackendConfig> only_grounder{{Role::Grounder, cfg.backends.at(Role::Grounder)}};
  const BackendBundle backends = make_bundle(only_grounder);
  const ExportResult result = export_tuning(ts, *backends.grounder, export_config(cfg));
  auto out_path = cfg.export_settings.output;
  if (out_path.is_relative()) out_path = cfg.output_dir / out_path;
  std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  write_tuning(out, result.samples);
  std::cout << "wrote " << result.samples.size() << " samples (" << result.positives << " positive, "
            << result.negatives << " negative) to " << out_path.string() << '\n';
  for (const auto& w : result.warnings) std::cout << "warning: " << w << '\n';
  return result.backend_errors > 0 ? kExitTaskFailures : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Route referring-expression grounding between specialist and MLLM backends"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "Run configuration (JSON)")->required();
    sub->add_option("--output-dir", o.output_dir, "Output directory");
    sub->add_option("--train", o.train, "Train split annotations");
    sub->add_option("--val", o.val, "Val split annotations");
    sub->add_option("--test", o.test, "Test split annotations");
    sub->add_option("--seed", o.seed, "Global seed");
  };
  auto add_method = [&](CLI::App* sub) {
    sub->add_option("--threshold", o.threshold, "SFA routing confidence threshold");
    sub->add_flag("--focus,!--no-focus", o.focus, "Focus enhancement");
    sub->add_option("--force", o.force, "Force SFA pathway: none, fast, slow");
    sub->add_option("--k", o.k, "CRS candidate count");
    sub->add_option("--nms", o.nms, "CRS NMS IoU threshold");
    sub->add_flag("--none,!--no-none", o.include_none, "Offer a None option");
  };

  auto* validate = app.add_subcommand("validate", "Load annotations and check split counts");
  add_common(validate);
  validate->add_option("--expected", o.expected, "Expected counts: none or finecops-ref");

  auto* run = app.add_subcommand("run", "Run a pipeline over the test split and report");
  add_common(run);
  add_method(run);
  run->add_option("--pipeline", o.pipeline, "specialist, mllm, sfa or crs");
  run->add_option("--workers", o.workers, "Worker threads");
  run->add_option("--ks", o.ks, "k values for Precision@k / Recall@k");
  run->add_option("--log", o.log, "Prediction log path");
  run->add_option("--abort-after", o.abort_after, "Crash after N records (testing)")->group("");
  run->add_flag("--abort-torn", o.abort_torn, "Leave a torn record when aborting (testing)")->group("");

  auto* exp = app.add_subcommand("export-tuning", "Export multi-choice instruction-tuning samples");
  add_common(exp);
  add_method(exp);
  exp->add_option("--positives", o.positives, "Positive samples to export");
  exp->add_option("--negatives", o.negatives, "Negative samples to export");
  exp->add_option("--output", o.export_output, "Output file");

  auto* report = app.add_subcommand("report", "Re-render the report from an existing prediction log");
  add_common(report);
  report->add_option("--ks", o.ks, "k values for Precision@k / Recall@k");
  report->add_option("--log", o.log, "Prediction log path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*exp) return cmd_export(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace recollab
