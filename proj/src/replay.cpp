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

#include "recollab/replay.hpp"

#include <fstream>

#include "recollab/hashing.hpp"

namespace recollab {

namespace {

constexpr char kUnitSeparator = '\x1f';

Json fixture_header(Role role) {
  Json h = Json::object();
  h["format"] = std::string(kFixtureFormat);
  h["version"] = kFixtureVersion;
  h["role"] = std::string(to_string(role));
  h["key"] = "sha256(role US image US query)";
  return h;
}

}  // namespace

std::string fixture_key(Role role, std::string_view image, std::string_view query) {
  std::string material;
  material.reserve(16 + image.size() + query.size());
  material += to_string(role);
  material += kUnitSeparator;
  material += image;
  material += kUnitSeparator;
  material += query;
  return sha256_hex(material);
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, Role role) {
  return dir / (std::string(to_string(role)) + ".jsonl");
}

ReplayTransport::ReplayTransport(Role role, const std::filesystem::path& dir) : role_(role) {
  const auto path = fixture_path(dir, role);
  std::ifstream in(path, std::ios::binary);
  auto fail = [&](const std::string& why) {
    throw BackendError(role, BackendErrorKind::Config, "", path.string() + ": " + why);
  };
  if (!in) fail("cannot open fixture file");
  std::string line;
  if (!std::getline(in, line)) fail("empty fixture file");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception&) {
    fail("unreadable header line");
  }
  if (header.value("format", "") != kFixtureFormat) fail("not a replay fixture");
  if (header.value("version", 0) != kFixtureVersion) {
    fail("unsupported fixture version " + header.value("version", Json()).dump());
  }
  if (header.value("role", "") != to_string(role)) fail("fixture is for another role");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Json rec = Json::parse(line);
      const std::string key = rec.at("key").get<std::string>();
      const std::string expected = fixture_key(role, rec.at("image").get<std::string>(),
                                               rec.at("query").get<std::string>());
      if (key != expected) fail("line " + std::to_string(lineno) + ": key does not match content");
      responses_[key] = std::move(rec.at("response"));
    } catch (const Json::exception& e) {
      fail("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

Json ReplayTransport::call(const CallContext& ctx, const Json& request) {
  const std::string query = request_key_text(request);
  auto it = responses_.find(fixture_key(role_, ctx.image, query));
  if (it == responses_.end()) {
    throw BackendError(role_, BackendErrorKind::FixtureMiss, ctx.task_id,
                       "no recorded response for image '" + ctx.image + "' query '" +
                           query + "'");
  }
  return it->second;
}

FixtureWriter::FixtureWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

void FixtureWriter::add(Role role, std::string_view image, std::string_view query,
                        Json response) {
  Json rec = Json::object();
  rec["key"] = fixture_key(role, image, query);
  rec["image"] = std::string(image);
  rec["query"] = std::string(query);
  rec["response"] = std::move(response);
  std::lock_guard lock(mu_);
  auto& table = records_[role];
  const std::string key = rec["key"].get<std::string>();
  table[key] = std::move(rec);
}

void FixtureWriter::write() const {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir_);
  for (const auto& [role, table] : records_) {
    std::ofstream out(fixture_path(dir_, role), std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write fixture for " + std::string(to_string(role)));
    out << fixture_header(role).dump() << '\n';
    for (const auto& [key, rec] : table) out << rec.dump() << '\n';
  }
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner,
                                       std::shared_ptr<FixtureWriter> writer)
    : inner_(std::move(inner)), writer_(std::move(writer)) {}

Json RecordingTransport::call(const CallContext& ctx, const Json& request) {
  Json resp = inner_->call(ctx, request);
  writer_->add(inner_->role(), ctx.image, request_key_text(request), resp);
  return resp;
}

}  // namespace recollab
