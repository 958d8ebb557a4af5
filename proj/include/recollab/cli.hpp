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

namespace recollab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailures = 1;
inline constexpr int kExitConfigError = 2;

// Entry point of the `recollab` tool: validate, run, export-tuning, report.
int run_cli(int argc, const char* const* argv);

}  // namespace recollab
