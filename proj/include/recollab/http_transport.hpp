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

#include <string>

#include "recollab/backends.hpp"

namespace recollab {

// One JSON POST per call. The body is the role request plus a "role" field;
// the response body is the role's response object. Connection failures,
// timeouts, 429 and 5xx are retried with exponential backoff; other non-2xx
// statuses fail immediately. Plain http only.
class HttpTransport final : public Transport {
 public:
  HttpTransport(Role role, BackendConfig cfg);

  Json call(const CallContext& ctx, const Json& request) override;
  Role role() const override { return role_; }

  const std::string& host() const { return host_; }
  int port() const { return port_; }
  const std::string& path() const { return path_; }

 private:
  Role role_;
  BackendConfig cfg_;
  std::string host_;
  int port_ = 80;
  std::string path_ = "/";
};

}  // namespace recollab
