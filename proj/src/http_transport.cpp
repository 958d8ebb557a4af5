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

#include "recollab/http_transport.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "recollab/hashing.hpp"

namespace recollab {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpTransport::HttpTransport(Role role, BackendConfig cfg) : role_(role), cfg_(std::move(cfg)) {
  static const std::regex kUrl(R"(^http://([^/:]+)(?::([0-9]+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, kUrl)) {
    throw BackendError(role, BackendErrorKind::Config, "",
                       "endpoint must look like http://host[:port]/path, got '" +
                           cfg_.endpoint + "'");
  }
  host_ = m[1].str();
  if (m[2].matched) port_ = std::stoi(m[2].str());
  if (m[3].matched) path_ = m[3].str();
}

Json HttpTransport::call(const CallContext& ctx, const Json& request) {
  Json body = request;
  body["role"] = std::string(to_string(role_));
  if (cfg_.send_image_base64) {
    const std::string bytes = read_file(ctx.image);
    if (bytes.empty()) {
      throw BackendError(role_, BackendErrorKind::Config, ctx.task_id,
                         "cannot read image '" + ctx.image + "' for base64 upload");
    }
    body["image_ref"] = ctx.image;
    body["image"] = base64_encode(bytes);
  }
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg_.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg_.bearer_token);
  }

  const auto timeout = cfg_.timeout;
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);

  BackendErrorKind last_kind = BackendErrorKind::Transport;
  std::string last_message;
  const int attempts = 1 + std::max(0, cfg_.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const auto wait = cfg_.backoff * (1 << (attempt - 1));
      spdlog::warn("{} task {}: retry {}/{} in {} ms ({})", to_string(role_), ctx.task_id,
                   attempt, attempts - 1, wait.count(), last_message);
      std::this_thread::sleep_for(wait);
    }
    httplib::Client client(host_, port_);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last_kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? BackendErrorKind::Timeout
                      : BackendErrorKind::Transport;
      last_message = httplib::to_string(err);
      continue;
    }
    if (retryable_status(res->status)) {
      last_kind = BackendErrorKind::Transport;
      last_message = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError(role_, BackendErrorKind::Payload, ctx.task_id,
                         "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return Json::parse(res->body);
    } catch (const Json::parse_error& e) {
      throw BackendError(role_, BackendErrorKind::Payload, ctx.task_id,
                         std::string("response is not JSON: ") + e.what());
    }
  }
  throw BackendError(role_, last_kind, ctx.task_id,
                     last_message + " after " + std::to_string(attempts) + " attempt(s)");
}

}  // namespace recollab
