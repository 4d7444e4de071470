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

#include "sentrace/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "json.hpp"
#include "sentrace/http.hpp"

#include "sentrace/textualize.hpp"

namespace sentrace {

namespace {

using nlohmann::json;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

ApiError::ApiError(int status, const std::string& body)
    : BackendError("HTTP " + std::to_string(status) + ": " + body.substr(0, 200)), status_(status), body_(body) {}

ReplayMiss::ReplayMiss(const std::string& prompt_hash)
    : BackendError("no recorded exchange for prompt hash " + prompt_hash) {}

std::string_view role_name(BackendRole role) {
    return role == BackendRole::Edge ? "edge" : "cloud";
}

BackendRole role_from_name(std::string_view name) {
    if (name == "edge") return BackendRole::Edge;
    if (name == "cloud") return BackendRole::Cloud;
    throw Error("unknown backend role: '" + std::string(name) + "'");
}

std::string prompt_hash(const std::string& system_text, const std::string& user_text) {
    return hex64(fnv1a64(system_text + '\x1f' + user_text));
}

Backend::Backend(BackendConfig config)
    : config_(std::move(config)), slots_(std::max(1, std::min(config_.max_concurrency, 256))) {
    if (config_.timeout.count() <= 0) throw Error("backend '" + config_.name + "': timeout must be positive");
    if (config_.temperature < 0) throw Error("backend '" + config_.name + "': temperature must be >= 0");
}

ChatExchange Backend::complete(const std::string& system_text, const std::string& user_text,
                               const ChatOptions& options) {
    slots_.acquire();
    ChatExchange exchange;
    try {
        exchange = send(system_text, user_text, options);
    } catch (...) {
        slots_.release();
        throw;
    }
    slots_.release();
    exchange.system_text = system_text;
    exchange.user_text = user_text;
    // Mocks answer locally and keep latency at zero, so repeated mock runs
    // produce identical reports; the HTTP backend measures its own latency
    // around the full request including retries.
    exchange.prompt_token_estimate = estimate_tokens(system_text) + estimate_tokens(user_text);
    return exchange;
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

struct ParsedUrl {
    std::string scheme_host_port;  // e.g. "http://127.0.0.1:8080"
    std::string path;              // e.g. "/v1/chat/completions"
};

ParsedUrl split_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint_url missing scheme: " + url);
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig config) : Backend(std::move(config)), rng_(std::random_device{}()) {
        if (!this->config().api_key_env.empty()) {
            const char* key = std::getenv(this->config().api_key_env.c_str());
            if (!key || !*key) {
                throw Error("backend '" + this->config().name + "': environment variable " +
                            this->config().api_key_env + " is not set");
            }
            api_key_ = key;
        }
    }

protected:
    ChatExchange send(const std::string& system_text, const std::string& user_text,
                      const ChatOptions& options) override {
        const auto t0 = std::chrono::steady_clock::now();
        const ParsedUrl url = split_url(config().endpoint_url);

        json messages = json::array();
        if (!system_text.empty()) {
            messages.push_back({{"role", "system"}, {"content", system_text}});
        }
        messages.push_back({{"role", "user"}, {"content", user_text}});
        const std::string body = json{{"model", config().model_id},
                                      {"messages", messages},
                                      {"temperature", options.temperature.value_or(config().temperature)},
                                      {"max_tokens", config().max_output_tokens}}
                                     .dump();

        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        const int max_attempts = 1 + std::max(0, config().max_retries);
        std::string last_failure;
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
            httplib::Client client(url.scheme_host_port);
            client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config().timeout));
            client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config().timeout));
            client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(config().timeout));

            httplib::Result result = client.Post(url.path, headers, body, "application/json");
            if (!result) {
                const bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                                       result.error() == httplib::Error::Read;
                last_failure = std::string(timed_out ? "timeout" : "transport error") + " (" +
                               httplib::to_string(result.error()) + ")";
                if (attempt == max_attempts) {
                    if (attempt > 1) throw RetriesExhausted(describe_exhaustion(attempt, last_failure));
                    if (timed_out) throw Timeout(config().name + ": " + last_failure);
                    throw TransportError(config().name + ": " + last_failure);
                }
                backoff(attempt);
                continue;
            }
            const int status = result->status;
            if (status >= 200 && status < 300) {
                ChatExchange exchange = parse_response(result->body, status);
                exchange.attempt_count = attempt;
                exchange.latency_ms = elapsed_ms(t0);
                return exchange;
            }
            const bool retryable = status == 429 || status >= 500;
            if (!retryable) throw ApiError(status, result->body);
            last_failure = "HTTP " + std::to_string(status);
            if (attempt == max_attempts) {
                if (attempt > 1) throw RetriesExhausted(describe_exhaustion(attempt, last_failure));
                throw ApiError(status, result->body);
            }
            backoff(attempt);
        }
        throw TransportError(config().name + ": unreachable");
    }

private:
    std::string describe_exhaustion(int attempts, const std::string& last_failure) const {
        return config().name + ": gave up after " + std::to_string(attempts) + " attempts, last failure: " +
               last_failure;
    }

    void backoff(int attempt) {
        const double base = static_cast<double>(config().retry_base.count());
        double wait = base;
        for (int i = 1; i < attempt; ++i) wait *= 2.0;
        double jitter;
        {
            std::lock_guard<std::mutex> lock(rng_mutex_);
            jitter = std::uniform_real_distribution<double>(0.0, 0.1 * wait)(rng_);
        }
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(wait + jitter));
    }

    ChatExchange parse_response(const std::string& body, int status) const {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::exception&) {
            throw ApiError(status, "unparseable response body: " + body.substr(0, 200));
        }
        ChatExchange exchange;
        if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
            const json& choice = doc["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content")) {
                exchange.response_text = choice["message"]["content"].get<std::string>();
            } else if (choice.contains("text")) {
                exchange.response_text = choice["text"].get<std::string>();
            } else {
                throw ApiError(status, "response choice carries no text: " + body.substr(0, 200));
            }
            exchange.finish_reason = choice.value("finish_reason", "");
        } else if (doc.contains("message") && doc["message"].contains("content")) {
            // ollama-style native shape
            exchange.response_text = doc["message"]["content"].get<std::string>();
            exchange.finish_reason = doc.value("done_reason", "");
        } else {
            throw ApiError(status, "response carries no choices: " + body.substr(0, 200));
        }
        return exchange;
    }

    std::string api_key_;
    std::mt19937 rng_;
    std::mutex rng_mutex_;
};

// ---------------------------------------------------------------------------
// Mocks

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(BackendConfig config, std::vector<std::string> transcript)
        : Backend(std::move(config)), script_(transcript.begin(), transcript.end()) {}

protected:
    ChatExchange send(const std::string&, const std::string&, const ChatOptions&) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (script_.empty()) throw BackendError(config().name + ": scripted transcript exhausted");
        ChatExchange exchange;
        exchange.response_text = script_.front();
        script_.pop_front();
        exchange.finish_reason = "stop";
        return exchange;
    }

private:
    std::deque<std::string> script_;
    std::mutex mutex_;
};

class RuleBackend final : public Backend {
public:
    RuleBackend(BackendConfig config, RuleFn rule) : Backend(std::move(config)), rule_(std::move(rule)) {}

protected:
    ChatExchange send(const std::string& system_text, const std::string& user_text,
                      const ChatOptions&) override {
        ChatExchange exchange;
        exchange.response_text = rule_(system_text, user_text);
        exchange.finish_reason = "stop";
        return exchange;
    }

private:
    RuleFn rule_;
};

struct ReplayEntry {
    std::string response_text;
    std::string finish_reason;
    int attempt_count = 1;
    int prompt_token_estimate = 0;
};

class ReplayBackend final : public Backend {
public:
    ReplayBackend(BackendConfig config, std::unordered_map<std::string, ReplayEntry> entries)
        : Backend(std::move(config)), entries_(std::move(entries)) {}

protected:
    ChatExchange send(const std::string& system_text, const std::string& user_text,
                      const ChatOptions&) override {
        const std::string hash = prompt_hash(system_text, user_text);
        const auto it = entries_.find(hash);
        if (it == entries_.end()) throw ReplayMiss(hash);
        ChatExchange exchange;
        exchange.response_text = it->second.response_text;
        exchange.finish_reason = it->second.finish_reason;
        exchange.attempt_count = it->second.attempt_count;
        return exchange;
    }

private:
    std::unordered_map<std::string, ReplayEntry> entries_;
};

class RecordingBackend final : public Backend {
public:
    RecordingBackend(std::unique_ptr<Backend> inner, const std::filesystem::path& log_path)
        : Backend(inner->config()), inner_(std::move(inner)), log_(log_path, std::ios::app) {
        if (!log_) throw Error("cannot open replay log for writing: " + log_path.string());
    }

protected:
    ChatExchange send(const std::string& system_text, const std::string& user_text,
                      const ChatOptions& options) override {
        ChatExchange exchange = inner_->complete(system_text, user_text, options);
        const json line = {{"prompt_hash", prompt_hash(system_text, user_text)},
                           {"request", {{"system", system_text}, {"user", user_text}}},
                           {"response_text", exchange.response_text},
                           {"meta",
                            {{"finish_reason", exchange.finish_reason},
                             {"attempt_count", exchange.attempt_count},
                             {"prompt_token_estimate", exchange.prompt_token_estimate},
                             {"latency_ms", exchange.latency_ms}}}};
        std::lock_guard<std::mutex> lock(mutex_);
        log_ << line.dump() << '\n';
        log_.flush();
        return exchange;
    }

private:
    std::unique_ptr<Backend> inner_;
    std::ofstream log_;
    std::mutex mutex_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(BackendConfig config) {
    return std::make_unique<HttpBackend>(std::move(config));
}

std::unique_ptr<Backend> make_scripted_backend(BackendConfig config, std::vector<std::string> transcript) {
    return std::make_unique<ScriptedBackend>(std::move(config), std::move(transcript));
}

std::unique_ptr<Backend> make_rule_backend(BackendConfig config, RuleFn rule) {
    return std::make_unique<RuleBackend>(std::move(config), std::move(rule));
}

std::unique_ptr<Backend> make_replay_backend(BackendConfig config, const std::filesystem::path& log_path) {
    std::ifstream in(log_path);
    if (!in) throw Error("cannot open replay log: " + log_path.string());
    std::unordered_map<std::string, ReplayEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(log_path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
        ReplayEntry entry;
        entry.response_text = doc.at("response_text").get<std::string>();
        const json meta = doc.value("meta", json::object());
        entry.finish_reason = meta.value("finish_reason", "");
        entry.attempt_count = meta.value("attempt_count", 1);
        entry.prompt_token_estimate = meta.value("prompt_token_estimate", 0);
        entries[doc.at("prompt_hash").get<std::string>()] = std::move(entry);
    }
    return std::make_unique<ReplayBackend>(std::move(config), std::move(entries));
}

std::unique_ptr<Backend> make_recording_backend(std::unique_ptr<Backend> inner,
                                                const std::filesystem::path& log_path) {
    return std::make_unique<RecordingBackend>(std::move(inner), log_path);
}

}  // namespace sentrace
