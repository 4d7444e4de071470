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

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentrace/timebase.hpp"

namespace sentrace {

class BackendError : public Error {
public:
    using Error::Error;
};

class Timeout : public BackendError {
public:
    using BackendError::BackendError;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class ApiError : public BackendError {
public:
    ApiError(int status, const std::string& body);
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

class RetriesExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

class ReplayMiss : public BackendError {
public:
    explicit ReplayMiss(const std::string& prompt_hash);
};

enum class BackendRole { Edge, Cloud };

std::string_view role_name(BackendRole role);
BackendRole role_from_name(std::string_view name);

struct BackendConfig {
    std::string name;
    BackendRole role = BackendRole::Edge;
    std::string endpoint_url;  // full URL including path, e.g. http://host:port/v1/chat/completions
    std::string model_id;
    double temperature = 0.0;            // reasoning trials sample at this setting
    double summarize_temperature = 0.0;  // summarization stays deterministic by default
    int max_output_tokens = 512;
    std::chrono::milliseconds timeout{30000};
    std::string api_key_env;  // env var holding the bearer token; empty = none
    int max_retries = 2;
    int max_concurrency = 4;
    std::chrono::milliseconds retry_base{1000};
    std::string system_preamble;  // empty = no system message
};

struct ChatOptions {
    std::optional<double> temperature;  // unset = the backend's configured default
};

struct ChatExchange {
    std::string system_text;
    std::string user_text;
    std::string response_text;
    double latency_ms = 0.0;
    int prompt_token_estimate = 0;
    std::string finish_reason;
    int attempt_count = 1;
};

/// Stable key for replay logs: hash of (system_text, user_text).
std::string prompt_hash(const std::string& system_text, const std::string& user_text);

/// Chat-style completion backend. Handles are shareable across threads;
/// in-flight requests are capped by config().max_concurrency.
class Backend {
public:
    explicit Backend(BackendConfig config);
    virtual ~Backend() = default;

    const BackendConfig& config() const { return config_; }

    ChatExchange complete(const std::string& system_text, const std::string& user_text,
                          const ChatOptions& options = {});

protected:
    virtual ChatExchange send(const std::string& system_text, const std::string& user_text,
                              const ChatOptions& options) = 0;

private:
    BackendConfig config_;
    std::counting_semaphore<256> slots_;
};

/// HTTP+JSON chat endpoint client: {model, messages, temperature, max_tokens}
/// out, choice text back. Retries transport errors and 429/5xx with jittered
/// exponential backoff; other 4xx fail immediately.
std::unique_ptr<Backend> make_http_backend(BackendConfig config);

/// Replays an ordered transcript of responses, one per call.
std::unique_ptr<Backend> make_scripted_backend(BackendConfig config, std::vector<std::string> transcript);

/// Deterministic function of the request text.
using RuleFn = std::function<std::string(const std::string& system_text, const std::string& user_text)>;
std::unique_ptr<Backend> make_rule_backend(BackendConfig config, RuleFn rule);

/// Serves recorded exchanges keyed by prompt hash; unknown prompts raise
/// ReplayMiss. Reproduces every ChatExchange field except latency.
std::unique_ptr<Backend> make_replay_backend(BackendConfig config, const std::filesystem::path& log_path);

/// Wraps another backend and appends one JSON object per exchange to the
/// log. This is the only code path that persists prompt text.
std::unique_ptr<Backend> make_recording_backend(std::unique_ptr<Backend> inner,
                                                const std::filesystem::path& log_path);

}  // namespace sentrace
