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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentrace/orchestrate.hpp"

namespace sentrace {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// One backend entry from the run config. type selects the transport:
/// "http" talks to a real endpoint, the mock types answer locally.
struct BackendSpec {
    BackendConfig config;
    std::string type = "http";     // http | rule | scripted | replay
    std::string rule;              // builtin rule name for type=rule
    nlohmann::json rule_params;    // parameters for the builtin rule
    std::vector<std::string> transcript;  // type=scripted
    std::string replay_log;        // type=replay, relative to the config file
    std::string record_log;        // optional: wrap the backend and record exchanges
};

/// The whole experiment in one self-describing file. Flags may override
/// individual fields; the fingerprint is computed after overrides.
struct RunConfig {
    std::filesystem::path base_dir;
    std::string manifest_path;
    std::string task_path;
    std::string template_path;  // empty = use the task's own prose
    StrategyPlan plan;
    DeploymentMode mode = DeploymentMode::Edge;
    std::vector<BackendSpec> backends;
    int trials = 5;
    PrivacyPolicy policy;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int workers = 0;
    bool strict = false;
    std::vector<std::string> hedge_phrases = default_hedge_phrases();

    std::filesystem::path resolve(const std::string& relative) const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// JSON file carrying the TaskSpec fields; invalid label sets are rejected.
TaskSpec load_task_file(const std::filesystem::path& path);

/// Stable hash of every experiment-defining field (strategy, mode, trials,
/// backends, seed, policy, task id, template version). Output locations and
/// worker counts do not participate.
std::string config_fingerprint(const RunConfig& config, const TaskSpec& task, const PromptTemplate& tmpl);

std::map<std::string, std::string> config_summary(const RunConfig& config, const TaskSpec& task,
                                                  const PromptTemplate& tmpl);

/// Instantiates every configured backend (owning); the second form hands
/// out the non-owning pointers the orchestrator consumes.
std::vector<std::unique_ptr<Backend>> build_backends(const RunConfig& config);
std::vector<Backend*> backend_pointers(const std::vector<std::unique_ptr<Backend>>& owned);

/// Builtin deterministic rules available to type=rule backends.
RuleFn make_builtin_rule(const std::string& name, const nlohmann::json& params);

StrategyPlan parse_strategy_json(const nlohmann::json& doc);

}  // namespace sentrace
