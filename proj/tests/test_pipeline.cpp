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

#include <gtest/gtest.h>

#include <fstream>

#include "recollab/pipeline.hpp"
#include "support/synthetic.hpp"

namespace recollab {
namespace {

Prediction sample_prediction() {
  Prediction p;
  p.task_id = "t1";
  p.box = BBox(1.5, 2, 30, 40.25);
  p.confidence = 0.625;
  p.pathway = Pathway::Slow;
  p.decision = RouteDecision{RouteLevel::Slow, 2, "dog", 0.2};
  p.ranked = {{*p.box, 0.625}};
  p.raw = "[[1.5, 2, 30, 40.25]]";
  p.notes = {"focus"};
  p.cost_units = 11;
  return p;
}

TEST(PredictionJson, RoundTrip) {
  const Prediction p = sample_prediction();
  EXPECT_EQ(prediction_from_json(prediction_to_json(p)), p);

  Prediction err;
  err.task_id = "t2";
  err.error = "timeout: grounder";
  EXPECT_EQ(prediction_from_json(prediction_to_json(err)), err);
  EXPECT_FALSE(err.rejected());

  Prediction none;
  none.task_id = "t3";
  none.pathway = Pathway::Crs;
  EXPECT_TRUE(none.rejected());
  EXPECT_EQ(prediction_from_json(prediction_to_json(none)), none);
}

TEST(PredictionLog, MissingFileIsEmpty) {
  const auto dir = testing::fresh_dir("log_missing");
  const LogContents c = read_prediction_log(dir / "nope.jsonl");
  EXPECT_TRUE(c.predictions.empty());
  EXPECT_EQ(c.valid_bytes, 0u);
  EXPECT_FALSE(c.truncated_tail);
}

TEST(PredictionLog, TornTailIsReported) {
  const auto dir = testing::fresh_dir("log_torn");
  const std::string line = prediction_to_json(sample_prediction()).dump() + "\n";
  testing::write_file(dir / "p.jsonl", line + line.substr(0, line.size() / 2));
  const LogContents c = read_prediction_log(dir / "p.jsonl");
  ASSERT_EQ(c.predictions.size(), 1u);
  EXPECT_EQ(c.valid_bytes, line.size());
  EXPECT_TRUE(c.truncated_tail);
}

class PipelineWorld : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::fresh_dir("pipeline_world");
    world_ = testing::build_world(dir_, {.positives = 30, .negatives_per_positive = 1, .seed = 5});
    cfg_ = parse_config(testing::world_config(world_, "sfa"), dir_);
    bundle_ = make_bundle(cfg_.backends);
  }

  std::filesystem::path dir_;
  testing::World world_;
  RunConfig cfg_;
  BackendBundle bundle_;
};

TEST_F(PipelineWorld, ResumeSkipsLoggedTasks) {
  const auto log = dir_ / "p.jsonl";
  const auto full = run_pipeline(world_.tasks, bundle_, cfg_, log, RunOptions{.workers = 3});
  EXPECT_EQ(full.executed, 60u);
  EXPECT_EQ(full.resumed, 0u);
  const std::string bytes = testing::read_file(log);

  // Keep 20 complete records then a torn one.
  std::size_t cut = 0;
  for (int i = 0; i < 20; ++i) cut = bytes.find('\n', cut) + 1;
  testing::write_file(log, bytes.substr(0, cut + 10));
  const auto again = run_pipeline(world_.tasks, bundle_, cfg_, log, RunOptions{.workers = 2});
  EXPECT_EQ(again.resumed, 20u);
  EXPECT_EQ(again.executed, 40u);
  EXPECT_EQ(again.predictions, full.predictions);
  EXPECT_EQ(testing::read_file(log), bytes);

  // A complete log means nothing left to run.
  const auto done = run_pipeline(world_.tasks, bundle_, cfg_, log, RunOptions{});
  EXPECT_EQ(done.executed, 0u);
  EXPECT_EQ(done.resumed, 60u);
}

TEST_F(PipelineWorld, PredictionsFollowTaskOrder) {
  const auto out = run_pipeline(world_.tasks, bundle_, cfg_, dir_ / "o.jsonl", RunOptions{.workers = 4});
  ASSERT_EQ(out.predictions.size(), world_.tasks.size());
  for (std::size_t i = 0; i < out.predictions.size(); ++i) {
    EXPECT_EQ(out.predictions[i].task_id, world_.tasks.tasks()[i].id);
  }
  const LogContents c = read_prediction_log(dir_ / "o.jsonl");
  EXPECT_EQ(c.predictions, out.predictions);
}

}  // namespace
}  // namespace recollab
