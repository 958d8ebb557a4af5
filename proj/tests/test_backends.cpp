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
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "recollab/backends.hpp"
#include "recollab/http_transport.hpp"
#include "recollab/replay.hpp"
#include "recollab/target.hpp"
#include "support/synthetic.hpp"

namespace recollab {
namespace {

CallContext ctx(std::string image = "img.jpg") {
  return CallContext{"t1", std::move(image), ImageSize{640, 480}};
}

TEST(ParseBoxAnswer, Examples) {
  const auto g = parse_box_answer("[[10, 20, 110, 220]]");
  ASSERT_TRUE(g.box);
  EXPECT_EQ(*g.box, BBox(10, 20, 110, 220));
  EXPECT_FALSE(g.malformed);

  const auto none = parse_box_answer("there is no such object");
  EXPECT_FALSE(none.box);
  EXPECT_FALSE(none.malformed);
  EXPECT_EQ(none.raw_text, "there is no such object");

  const auto inverted = parse_box_answer("[[5,5,3,3]]");
  EXPECT_FALSE(inverted.box);
  EXPECT_TRUE(inverted.malformed);

  const auto embedded = parse_box_answer("The bird is at [[1.5, 2, 30.25, 40]] in the image.");
  ASSERT_TRUE(embedded.box);
  EXPECT_EQ(*embedded.box, BBox(1.5, 2, 30.25, 40));
}

double log_space_mean(const std::vector<double>& p) {
  long double s = 0;
  for (double v : p) s += std::log(static_cast<long double>(v));
  return static_cast<double>(std::exp(s / p.size()));
}

TEST(DeriveConfidence, Examples) {
  GenerativeGrounding g;
  g.box = BBox(0, 0, 1, 1);
  g.coordinate_token_probs = {1.0, 1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(*derive_confidence(g), 1.0);
  g.coordinate_token_probs = {0.25, 1.0};
  EXPECT_NEAR(*derive_confidence(g), 0.5, 1e-15);
  g.box.reset();
  EXPECT_FALSE(derive_confidence(g));
}

TEST(DeriveConfidence, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 500; ++i) {
    GenerativeGrounding g;
    g.box = BBox(0, 0, 1, 1);
    for (int j = 0; j < 1 + i % 8; ++j) g.coordinate_token_probs.push_back(u(rng));
    const double base = *derive_confidence(g);
    EXPECT_NEAR(base, log_space_mean(g.coordinate_token_probs), 1e-12);
    auto shuffled = g;
    std::shuffle(shuffled.coordinate_token_probs.begin(), shuffled.coordinate_token_probs.end(), rng);
    EXPECT_NEAR(*derive_confidence(shuffled), base, 1e-12);
    auto raised = g;
    raised.coordinate_token_probs[0] = std::min(1.0, raised.coordinate_token_probs[0] * 1.5);
    EXPECT_GE(*derive_confidence(raised), base - 1e-15);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
  }
}

TEST(CoordinateFrame, NormalizedRoundTrip) {
  CoordinateFrame f{CoordinateFrame::Convention::Normalized, 1000.0};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 480);
  for (int i = 0; i < 1000; ++i) {
    double x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    const BBox px(x0, y0, x1, y1);
    const BBox raw = pixels_to_frame(px, f, ctx(), Role::Mllm);
    const BBox rounded(std::round(raw.x0()), std::round(raw.y0()), std::round(raw.x1()), std::round(raw.y1()));
    const BBox back = frame_to_pixels(rounded, f, ctx(), Role::Mllm);
    EXPECT_LT(std::abs(back.x0() - px.x0()), 0.5);
    EXPECT_LT(std::abs(back.y1() - px.y1()), 0.5);
  }
  EXPECT_EQ(frame_to_pixels(BBox(0, 0, 500, 1000), f, ctx(), Role::Mllm), BBox(0, 0, 320, 480));
  CallContext no_size{"t", "i", std::nullopt};
  try {
    frame_to_pixels(BBox(0, 0, 1, 1), f, no_size, Role::Mllm);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Config);
  }
  const CoordinateFrame pixel;
  EXPECT_EQ(frame_to_pixels(BBox(1, 2, 3, 4), pixel, no_size, Role::Mllm), BBox(1, 2, 3, 4));
}

TEST(ResolveChoice, ExactThenStandaloneLetter) {
  const std::vector<std::string> labels{"A", "B", "C", "D"};
  EXPECT_EQ(resolve_choice("B", labels), "B");
  EXPECT_EQ(resolve_choice("  C \n", labels), "C");
  EXPECT_EQ(resolve_choice("Answer: C.", labels), "C");
  EXPECT_EQ(resolve_choice("d", labels), "D");
  EXPECT_FALSE(resolve_choice("none of these", labels));
  EXPECT_FALSE(resolve_choice("E", labels));
  EXPECT_FALSE(resolve_choice("", labels));
}

std::vector<Detection> three_dets() {
  return {{BBox(0, 0, 10, 10), 0.9, "dog", {}},
          {BBox(20, 20, 40, 40), 0.3, "dog", {}},
          {BBox(50, 50, 60, 70), 0.1, "dog", {}}};
}

TEST(Replay, EchoesStoredDetections) {
  const auto dir = testing::fresh_dir("replay_echo");
  FixtureWriter w(dir);
  std::vector<Detection> one{{BBox(1, 2, 3, 4), 0.7, "dog", {}}};
  w.add(Role::Detector, "img.jpg", "dog", Json{{"detections", testing::detections_json(one)}});
  w.add(Role::Detector, "img.jpg", "cat", Json{{"detections", Json::array()}});
  w.write();
  TransportDetector det(std::make_shared<ReplayTransport>(Role::Detector, dir), {});
  EXPECT_EQ(det.detect(ctx(), "dog"), one);
  EXPECT_TRUE(det.detect(ctx(), "cat").empty());
  try {
    det.detect(ctx(), "horse");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::FixtureMiss);
    EXPECT_EQ(e.task_id(), "t1");
  }
}

TEST(Replay, FileFormatIsCanonical) {
  const auto dir = testing::fresh_dir("replay_format");
  FixtureWriter w(dir);
  w.add(Role::Grounder, "b.jpg", "q2", Json{{"detections", Json::array()}});
  w.add(Role::Grounder, "a.jpg", "q1", Json{{"detections", Json::array()}});
  w.write();
  const std::string text = testing::read_file(fixture_path(dir, Role::Grounder));
  const auto first_nl = text.find('\n');
  const Json header = Json::parse(text.substr(0, first_nl));
  EXPECT_EQ(header.at("format"), "recollab-replay");
  EXPECT_EQ(header.at("version"), 1);
  EXPECT_EQ(header.at("role"), "grounder");
  // Key is sha256 over role, image and query joined by 0x1f.
  EXPECT_EQ(fixture_key(Role::Grounder, "a.jpg", "q1").size(), 64u);
  EXPECT_NE(fixture_key(Role::Grounder, "a.jpg", "q1"), fixture_key(Role::Detector, "a.jpg", "q1"));
  EXPECT_NE(fixture_key(Role::Grounder, "a.jp", "gq1"), fixture_key(Role::Grounder, "a.jpg", "q1"));
  std::vector<std::string> keys;
  std::size_t pos = first_nl + 1;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    keys.push_back(Json::parse(text.substr(pos, nl - pos)).at("key"));
    pos = nl + 1;
  }
  EXPECT_EQ(keys.size(), 2u);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  // Deterministic bytes.
  w.write();
  EXPECT_EQ(testing::read_file(fixture_path(dir, Role::Grounder)), text);
}

TEST(Replay, RejectsBadHeader) {
  const auto dir = testing::fresh_dir("replay_header");
  testing::write_file(fixture_path(dir, Role::Mllm), "{\"format\":\"other\",\"version\":1}\n");
  EXPECT_THROW(ReplayTransport(Role::Mllm, dir), BackendError);
  testing::write_file(fixture_path(dir, Role::Mllm),
                      "{\"format\":\"recollab-replay\",\"version\":2,\"role\":\"mllm\"}\n");
  EXPECT_THROW(ReplayTransport(Role::Mllm, dir), BackendError);
  EXPECT_THROW(ReplayTransport(Role::Selector, dir), BackendError);  // missing file
}

TEST(Replay, PureUnderConcurrency) {
  const auto dir = testing::fresh_dir("replay_threads");
  FixtureWriter w(dir);
  for (int i = 0; i < 50; ++i) {
    w.add(Role::Mllm, "img" + std::to_string(i), "p",
          Json{{"text", "[[" + std::to_string(i) + ", 0, 100, 100]]"}, {"coordinate_token_probs", {0.5}}});
  }
  w.write();
  auto transport = std::make_shared<ReplayTransport>(Role::Mllm, dir);
  TransportGenerativeGrounder g(transport, {});
  std::atomic<int> mismatches{0};
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int rep = 0; rep < 20; ++rep) {
        for (int i = 0; i < 50; ++i) {
          const auto r = g.generate_ground(ctx("img" + std::to_string(i)), "p");
          if (!r.box || r.box->x0() != i) ++mismatches;
        }
      }
    });
  }
  threads.clear();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(Replay, ErrorPayloadRaised) {
  const auto dir = testing::fresh_dir("replay_error");
  FixtureWriter w(dir);
  w.add(Role::Grounder, "img.jpg", "q", Json{{"error", {{"kind", "timeout"}, {"message", "slow"}}}});
  w.write();
  TransportGrounder g(std::make_shared<ReplayTransport>(Role::Grounder, dir), {});
  try {
    g.ground(ctx(), "q");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Timeout);
    EXPECT_EQ(e.role(), Role::Grounder);
  }
}

TEST(Adapters, PayloadValidation) {
  const auto dir = testing::fresh_dir("adapter_payload");
  FixtureWriter w(dir);
  w.add(Role::Grounder, "img.jpg", "a dog",
        Json{{"detections", {{{"box", {0, 0, 5, 5}}, {"score", 0.4}, {"token_scores", {{{"span", {2, 5}}, {"score", 0.8}}}}},
                             {{"box", {0, 0, 9, 9}}, {"score", 0.6}}}}});
  w.add(Role::Grounder, "img.jpg", "bad", Json{{"detections", {{{"box", {0, 0, 5, 5}}, {"score", 1.4}}}}});
  w.add(Role::Grounder, "img.jpg", "oob", Json{{"detections", {{{"box", {0, 0, 5, 5}}, {"score", 0.4},
                                                                {"token_scores", {{{"span", {0, 9}}, {"score", 0.8}}}}}}}});
  w.add(Role::Mllm, "img.jpg", "noprob", Json{{"text", "[[1, 1, 2, 2]]"}});
  w.add(Role::Selector, "img.jpg", "pick", Json{{"text", "Answer: b"}, {"label_prob", 0.92}});
  w.add(Role::Selector, "img.jpg", "none", Json{{"text", "D"}, {"label_prob", 0.6}});
  w.write();
  TransportGrounder g(std::make_shared<ReplayTransport>(Role::Grounder, dir), {});
  const auto r = g.ground(ctx(), "a dog");
  ASSERT_EQ(r.detections.size(), 2u);
  EXPECT_EQ(r.detections[0].score, 0.6);  // sorted descending
  EXPECT_EQ(r.detections[1].token_scores.size(), 1u);
  EXPECT_EQ(r.query, "a dog");
  EXPECT_THROW(g.ground(ctx(), "bad"), BackendError);
  EXPECT_THROW(g.ground(ctx(), "oob"), BackendError);

  TransportGenerativeGrounder m(std::make_shared<ReplayTransport>(Role::Mllm, dir), {});
  EXPECT_THROW(m.generate_ground(ctx(), "noprob"), BackendError);

  TransportSelector s(std::make_shared<ReplayTransport>(Role::Selector, dir));
  const std::vector<std::string> abc{"A", "B", "C"};
  const auto sel = s.select(ctx(), "pick", abc);
  EXPECT_EQ(sel.label, "B");
  EXPECT_DOUBLE_EQ(sel.label_prob, 0.92);
  const std::vector<std::string> abcd{"A", "B", "C", "D"};
  EXPECT_EQ(s.select(ctx(), "none", abcd).label, "D");
}

TEST(Adapters, NormalizedGrounderConverts) {
  const auto dir = testing::fresh_dir("adapter_normalized");
  FixtureWriter w(dir);
  w.add(Role::Grounder, "img.jpg", "q", Json{{"detections", {{{"box", {0, 0, 500, 500}}, {"score", 0.5}}}}});
  w.write();
  TransportGrounder g(std::make_shared<ReplayTransport>(Role::Grounder, dir),
                      CoordinateFrame{CoordinateFrame::Convention::Normalized, 1000.0});
  EXPECT_EQ(g.ground(ctx(), "q").detections[0].box, BBox(0, 0, 320, 240));
}

TEST(TargetExtraction, Heuristic) {
  EXPECT_EQ(heuristic_target("the child positioned to the right of the white cap"), "child");
  EXPECT_EQ(heuristic_target("a dog"), "dog");
  EXPECT_EQ(heuristic_target("the bird to the left of the white cow"), "bird");
  EXPECT_EQ(heuristic_target("the giraffe left of the house"), "giraffe");
  EXPECT_EQ(heuristic_target("man wearing a hat"), "man");
  EXPECT_EQ(heuristic_target("the red cup that is on the table"), "cup");
  EXPECT_EQ(heuristic_target("a large brown horse standing near the fence"), "horse");
}

TEST(TargetExtraction, PromptAndResponse) {
  const std::string p = build_extraction_prompt("the bird to the left of the white cow");
  EXPECT_NE(p.find("Which object does the given expression refer to?"), std::string::npos);
  EXPECT_NE(p.find("the bird to the left of the white cow"), std::string::npos);
  EXPECT_EQ(parse_extraction_response(R"({"target": "bird"})"), "bird");
  EXPECT_EQ(parse_extraction_response(R"(Sure! {'target': 'white cap'})"), "white cap");
  EXPECT_FALSE(parse_extraction_response("bird"));
}

TEST(TargetExtraction, TransportFallsBackToHeuristic) {
  const auto dir = testing::fresh_dir("extractor_fallback");
  FixtureWriter w(dir);
  const std::string good = "the dog near the car";
  const std::string bad = "a cat on a mat";
  w.add(Role::Extractor, "img.jpg", build_extraction_prompt(good), Json{{"text", R"({"target": "dog"})"}});
  w.add(Role::Extractor, "img.jpg", build_extraction_prompt(bad), Json{{"text", "it is a cat"}});
  w.write();
  TransportTargetExtractor x(std::make_shared<ReplayTransport>(Role::Extractor, dir));
  const auto a = x.extract_target(ctx(), good);
  EXPECT_EQ(a.target, "dog");
  EXPECT_FALSE(a.used_fallback);
  const auto b = x.extract_target(ctx(), bad);
  EXPECT_EQ(b.target, "cat");
  EXPECT_TRUE(b.used_fallback);
  EXPECT_EQ(b.raw_text, "it is a cat");
}

class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::jthread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() { server_.stop(); }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::jthread thread_;
};

BackendConfig http_cfg(const std::string& url) {
  BackendConfig c;
  c.kind = BackendKind::Http;
  c.endpoint = url;
  c.timeout = std::chrono::milliseconds(2000);
  c.backoff = std::chrono::milliseconds(5);
  return c;
}

TEST(Http, DetectRoundTrip) {
  StubServer stub;
  Json seen;
  std::string auth;
  stub.server().Post("/detect", [&](const httplib::Request& req, httplib::Response& res) {
    seen = Json::parse(req.body);
    auth = req.get_header_value("Authorization");
    Json body{{"detections", testing::detections_json(three_dets())}};
    // Send them shuffled; the adapter restores score order.
    std::swap(body["detections"][0], body["detections"][2]);
    res.set_content(body.dump(), "application/json");
  });
  auto cfg = http_cfg(stub.url("/detect"));
  cfg.bearer_token = "s3cret";
  cfg.parameters = Json{{"box_threshold", 0.05}};
  auto bundle = make_bundle({{Role::Detector, cfg}});
  const auto dets = bundle.detector->detect(ctx(), "dog");
  EXPECT_EQ(dets, three_dets());
  EXPECT_EQ(seen.at("query"), "dog");
  EXPECT_EQ(seen.at("image"), "img.jpg");
  EXPECT_EQ(seen.at("role"), "detector");
  EXPECT_EQ(seen.at("parameters").at("box_threshold"), 0.05);
  EXPECT_EQ(auth, "Bearer s3cret");
}

TEST(Http, GroundAndGenerateRoundTrip) {
  StubServer stub;
  stub.server().Post("/ground", [&](const httplib::Request& req, httplib::Response& res) {
    const Json in = Json::parse(req.body);
    Json d = testing::detections_json(three_dets());
    d[0]["token_scores"] = {{{"span", {0, 3}}, {"score", 0.75}}};
    res.set_content(Json{{"detections", d}}.dump(), "application/json");
    EXPECT_EQ(in.at("query"), "dog by the car");
  });
  stub.server().Post("/mllm", [&](const httplib::Request& req, httplib::Response& res) {
    const Json in = Json::parse(req.body);
    EXPECT_EQ(in.at("prompt"), "Where is x?");
    res.set_content(R"({"text":"[[100, 100, 500, 500]]","coordinate_token_probs":[0.5,0.5,0.5,0.5]})",
                    "application/json");
  });
  auto mllm = http_cfg(stub.url("/mllm"));
  mllm.frame = CoordinateFrame{CoordinateFrame::Convention::Normalized, 1000.0};
  auto bundle = make_bundle({{Role::Grounder, http_cfg(stub.url("/ground"))}, {Role::Mllm, mllm}});
  const auto g = bundle.grounder->ground(ctx(), "dog by the car");
  ASSERT_EQ(g.detections.size(), 3u);
  EXPECT_EQ(g.detections[0].token_scores[0].score, 0.75);
  const auto m = bundle.mllm->generate_ground(ctx(), "Where is x?");
  ASSERT_TRUE(m.box);
  EXPECT_EQ(*m.box, BBox(64, 48, 320, 240));
  EXPECT_DOUBLE_EQ(*derive_confidence(m), 0.5);
}

TEST(Http, RetriesServerErrorsThenSucceeds) {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.server().Post("/sel", [&](const httplib::Request& req, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    const Json in = Json::parse(req.body);
    EXPECT_EQ(in.at("parameters").at("labels"), Json::array({"A", "B"}));
    res.set_content(R"({"text":"A","label_prob":0.8})", "application/json");
  });
  auto bundle = make_bundle({{Role::Selector, http_cfg(stub.url("/sel"))}});
  const std::vector<std::string> labels{"A", "B"};
  const auto r = bundle.selector->select(ctx(), "choose", labels);
  EXPECT_EQ(r.label, "A");
  EXPECT_EQ(calls.load(), 3);
}

TEST(Http, RetryBudgetExhausted) {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.server().Post("/down", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  auto bundle = make_bundle({{Role::Detector, http_cfg(stub.url("/down"))}});
  try {
    bundle.detector->detect(ctx(), "dog");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Transport);
    EXPECT_EQ(e.task_id(), "t1");
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(Http, ClientErrorNotRetried) {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.server().Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  stub.server().Post("/text", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  auto bundle = make_bundle({{Role::Detector, http_cfg(stub.url("/bad"))},
                             {Role::Grounder, http_cfg(stub.url("/text"))}});
  EXPECT_THROW(bundle.detector->detect(ctx(), "dog"), BackendError);
  EXPECT_EQ(calls.load(), 1);
  try {
    bundle.grounder->ground(ctx(), "dog");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Payload);
  }
}

TEST(Http, TimeoutIsReported) {
  StubServer stub;
  stub.server().Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(R"({"detections":[]})", "application/json");
  });
  auto cfg = http_cfg(stub.url("/slow"));
  cfg.timeout = std::chrono::milliseconds(100);
  cfg.retries = 0;
  auto bundle = make_bundle({{Role::Detector, cfg}});
  try {
    bundle.detector->detect(ctx(), "dog");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Timeout);
  }
}

TEST(Http, ConnectionRefused) {
  auto cfg = http_cfg("http://127.0.0.1:1/x");
  cfg.retries = 1;
  auto bundle = make_bundle({{Role::Detector, cfg}});
  EXPECT_THROW(bundle.detector->detect(ctx(), "dog"), BackendError);
}

TEST(Http, EndpointParsing) {
  HttpTransport t(Role::Mllm, http_cfg("http://localhost:8080/v1/ground"));
  EXPECT_EQ(t.host(), "localhost");
  EXPECT_EQ(t.port(), 8080);
  EXPECT_EQ(t.path(), "/v1/ground");
  EXPECT_THROW(HttpTransport(Role::Mllm, http_cfg("https://x/y")), BackendError);
  EXPECT_THROW(HttpTransport(Role::Mllm, http_cfg("localhost")), BackendError);
}

TEST(Http, Base64Image) {
  StubServer stub;
  Json seen;
  stub.server().Post("/d", [&](const httplib::Request& req, httplib::Response& res) {
    seen = Json::parse(req.body);
    res.set_content(R"({"detections":[]})", "application/json");
  });
  const auto dir = testing::fresh_dir("http_base64");
  testing::write_file(dir / "img.bin", "abc");
  auto cfg = http_cfg(stub.url("/d"));
  cfg.send_image_base64 = true;
  auto bundle = make_bundle({{Role::Detector, cfg}});
  bundle.detector->detect(ctx((dir / "img.bin").string()), "dog");
  EXPECT_EQ(seen.at("image"), "YWJj");
  EXPECT_EQ(seen.at("image_ref"), (dir / "img.bin").string());
}

TEST(Recording, RecordedFixturesReplay) {
  StubServer stub;
  stub.server().Post("/g", [&](const httplib::Request& req, httplib::Response& res) {
    const Json in = Json::parse(req.body);
    const double s = in.at("query") == "a" ? 0.9 : 0.4;
    res.set_content(Json{{"detections", {{{"box", {1, 1, 5, 5}}, {"score", s}}}}}.dump(), "application/json");
  });
  const auto dir = testing::fresh_dir("recording");
  auto writer = std::make_shared<FixtureWriter>(dir);
  auto live = std::make_shared<RecordingTransport>(make_transport(Role::Grounder, http_cfg(stub.url("/g"))), writer);
  TransportGrounder rec(live, {});
  const auto a = rec.ground(ctx(), "a");
  const auto b = rec.ground(ctx(), "b");
  writer->write();
  TransportGrounder replay(std::make_shared<ReplayTransport>(Role::Grounder, dir), {});
  EXPECT_EQ(replay.ground(ctx(), "a").detections, a.detections);
  EXPECT_EQ(replay.ground(ctx(), "b").detections, b.detections);
}

TEST(Bundle, HeuristicOnlyForExtractor) {
  BackendConfig h;
  h.kind = BackendKind::Heuristic;
  EXPECT_NO_THROW(make_bundle({{Role::Extractor, h}}));
  EXPECT_THROW(make_bundle({{Role::Detector, h}}), std::invalid_argument);
}

}  // namespace
}  // namespace recollab
