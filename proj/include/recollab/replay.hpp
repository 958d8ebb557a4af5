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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "recollab/backends.hpp"

namespace recollab {

// Fixture layout: one file per role, `<dir>/<role>.jsonl`. The first line is
// a header
//   {"format":"recollab-replay","version":1,"role":"<role>","key":"sha256(role US image US query)"}
// followed by one record per line, sorted by key:
//   {"key":"<hex>","image":"...","query":"...","response":{...}}
// where US is the 0x1f unit separator and `response` is the raw backend
// response, before coordinate conversion.
inline constexpr std::string_view kFixtureFormat = "recollab-replay";
inline constexpr int kFixtureVersion = 1;

std::string fixture_key(Role role, std::string_view image, std::string_view query);
std::filesystem::path fixture_path(const std::filesystem::path& dir, Role role);

// Serves recorded responses. The table is immutable after construction, so
// lookups need no locking. A request with no recorded response is a
// FixtureMiss error.
class ReplayTransport final : public Transport {
 public:
  ReplayTransport(Role role, const std::filesystem::path& dir);

  Json call(const CallContext& ctx, const Json& request) override;
  Role role() const override { return role_; }
  std::size_t size() const { return responses_.size(); }

 private:
  Role role_;
  std::unordered_map<std::string, Json> responses_;
};

// Accumulates fixture records and writes them in canonical order. Safe for
// concurrent add().
class FixtureWriter {
 public:
  explicit FixtureWriter(std::filesystem::path dir);

  // Later writes for the same key replace earlier ones.
  void add(Role role, std::string_view image, std::string_view query, Json response);
  // Writes every role that has records; existing files are replaced.
  void write() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<Role, std::map<std::string, Json>> records_;
};

// Forwards to a live transport and records each successful exchange.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::shared_ptr<FixtureWriter> writer);

  Json call(const CallContext& ctx, const Json& request) override;
  Role role() const override { return inner_->role(); }

 private:
  std::shared_ptr<Transport> inner_;
  std::shared_ptr<FixtureWriter> writer_;
};

}  // namespace recollab
