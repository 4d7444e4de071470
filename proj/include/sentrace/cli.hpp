// Copyright 2026 The sentrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sentrace/config.hpp"

namespace sentrace {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataInvalid = 2;
inline constexpr int kExitPrivacy = 3;
inline constexpr int kExitBackend = 4;

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& config, const std::string& sample_id, bool show_prompt, std::ostream& out,
            std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full argv interface: validate | run | eval | compare.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sentrace
