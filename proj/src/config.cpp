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

#include "sentrace/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sentrace {

namespace {

using nlohmann::json;

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Seconds duration_field(const json& doc, const char* key, Seconds fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (v.is_number_integer()) return Seconds{v.get<std::int64_t>()};
    return parse_duration(v.get<std::string>());
}

std::string format_number(double value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

/// All floats following "<prefix>" occurrences in text.
std::vector<double> scan_values(const std::string& text, const std::string& prefix) {
    std::vector<double> values;
    std::size_t pos = 0;
    while ((pos = text.find(prefix, pos)) != std::string::npos) {
        pos += prefix.size();
        std::size_t end = pos;
        while (end < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.' || text[end] == '-')) {
            ++end;
        }
        if (end > pos) {
            try {
                values.push_back(std::stod(text.substr(pos, end - pos)));
            } catch (const std::exception&) {
            }
        }
        pos = end;
    }
    return values;
}

bool is_reasoning_prompt(const std::string& user_text) {
    // Reasoning format instructions spell out the wanted "Answer: <label>"
    // line; summarization prompts never do.
    return user_text.find("Answer: ") != std::string::npos || user_text.find("\"Answer:") != std::string::npos;
}

/// Classifies by the mean of a numeric channel. Summarization prompts get a
/// bullet digest carrying that mean; reasoning prompts get an answer line.
RuleFn channel_threshold_rule(const json& params) {
    const std::string channel = params.at("channel").get<std::string>();
    const double threshold = params.at("threshold").get<double>();
    const std::string above = params.at("above_label").get<std::string>();
    const std::string below = params.at("below_label").get<std::string>();
    return [channel, threshold, above, below](const std::string&, const std::string& user_text) {
        std::vector<double> values = scan_values(user_text, channel + "=");
        const std::vector<double> summarized = scan_values(user_text, "mean " + channel + " ");
        values.insert(values.end(), summarized.begin(), summarized.end());
        if (is_reasoning_prompt(user_text)) {
            if (values.empty()) return std::string("I cannot determine the state from the given data.");
            double sum = 0.0;
            for (const double v : values) sum += v;
            const double mean = sum / static_cast<double>(values.size());
            return "Answer: " + (mean > threshold ? above : below);
        }
        if (values.empty()) return std::string("- no readings in this period.");
        double sum = 0.0, lo = values.front(), hi = values.front();
        for (const double v : values) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double mean = sum / static_cast<double>(values.size());
        return "- mean " + channel + " " + format_number(mean) + " over " + std::to_string(values.size()) +
               " readings.\n- values ranged " + format_number(lo) + " to " + format_number(hi) + ".";
    };
}

/// Classifies by how often an event label occurs. Summaries carry the
/// count; the reasoner adds direct occurrences and summarized counts.
RuleFn event_count_threshold_rule(const json& params) {
    const std::string label = params.at("label").get<std::string>();
    const int threshold = params.at("threshold").get<int>();
    const std::string above = params.at("above_label").get<std::string>();
    const std::string below = params.at("below_label").get<std::string>();
    return [label, threshold, above, below](const std::string&, const std::string& user_text) {
        int direct = 0;
        std::stringstream ss(user_text);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.size() > label.size() + 12 && line.compare(line.size() - label.size(), label.size(), label) == 0 &&
                line[line.size() - label.size() - 1] == ' ' && line[2] == ':') {
                ++direct;  // "HH:MM–HH:MM <label>" event lines
            }
        }
        int summarized = 0;
        for (const double v : scan_values(user_text, label + " events: ")) summarized += static_cast<int>(v);
        const int total = direct + summarized;
        if (is_reasoning_prompt(user_text)) {
            if (total == 0) return std::string("There is not enough information to decide.");
            return "Answer: " + (total > threshold ? above : below);
        }
        return "- " + label + " events: " + std::to_string(total) + " in this period.";
    };
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& relative) const {
    const std::filesystem::path p(relative);
    return p.is_absolute() ? p : base_dir / p;
}

StrategyPlan parse_strategy_json(const json& doc) {
    StrategyPlan plan;
    plan.kind = strategy_from_name(doc.value("kind", "direct"));
    plan.chunk = duration_field(doc, "chunk", Seconds{0});
    if (doc.contains("evaluation_window")) {
        plan.evaluation_window = duration_field(doc, "evaluation_window", Seconds{0});
    }
    if (doc.contains("t0") || doc.contains("tn") || doc.contains("candidate_tns")) {
        HistoryConfig history;
        history.latest = duration_field(doc, "t0", Seconds{30 * 60});
        history.history = duration_field(doc, "tn", Seconds{6 * 3600});
        for (const auto& v : doc.value("candidate_tns", json::array())) {
            history.candidate_histories.push_back(
                v.is_number_integer() ? Seconds{v.get<std::int64_t>()} : parse_duration(v.get<std::string>()));
        }
        plan.history = std::move(history);
    }
    if ((plan.kind == StrategyKind::SelectiveHistory || plan.kind == StrategyKind::AdaptiveHistory) &&
        !plan.history) {
        throw ConfigError(std::string(strategy_name(plan.kind)) + " strategy requires t0/tn settings");
    }
    if (plan.kind == StrategyKind::AdaptiveHistory && plan.history->candidate_histories.empty()) {
        throw ConfigError("adaptive_history strategy requires candidate_tns");
    }
    return plan;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const json doc = parse_json_file(path);
    RunConfig config;
    config.base_dir = path.parent_path();
    try {
        config.manifest_path = doc.at("manifest").get<std::string>();
        config.task_path = doc.at("task").get<std::string>();
        config.template_path = doc.value("template", "");
        config.plan = parse_strategy_json(doc.value("strategy", json::object()));
        config.mode = mode_from_name(doc.value("mode", "edge"));
        config.trials = doc.value("trials", 5);
        config.policy.enforce = doc.value("privacy_enforce", true);
        config.out_dir = doc.value("out_dir", "out");
        config.seed = doc.value("seed", 0ULL);
        config.workers = doc.value("workers", 0);
        config.strict = doc.value("strict", false);
        if (doc.contains("hedge_phrases")) {
            config.hedge_phrases.clear();
            for (const auto& p : doc.at("hedge_phrases")) config.hedge_phrases.push_back(p.get<std::string>());
        }
        for (const auto& b : doc.at("backends")) {
            BackendSpec spec;
            spec.config.name = b.at("name").get<std::string>();
            spec.config.role = role_from_name(b.at("role").get<std::string>());
            spec.type = b.value("type", "http");
            spec.config.endpoint_url = b.value("endpoint_url", "");
            spec.config.model_id = b.value("model_id", spec.type);
            spec.config.temperature = b.value("temperature", 0.0);
            spec.config.summarize_temperature = b.value("summarize_temperature", 0.0);
            spec.config.max_output_tokens = b.value("max_output_tokens", 512);
            spec.config.timeout = std::chrono::milliseconds{b.value("timeout_ms", 30000)};
            spec.config.api_key_env = b.value("api_key_env", "");
            spec.config.max_retries = b.value("max_retries", 2);
            spec.config.max_concurrency = b.value("max_concurrency", 4);
            spec.config.retry_base = std::chrono::milliseconds{b.value("retry_base_ms", 1000)};
            spec.config.system_preamble = b.value("system_preamble", "");
            spec.rule = b.value("rule", "");
            spec.rule_params = b.value("rule_params", json::object());
            for (const auto& t : b.value("transcript", json::array())) {
                spec.transcript.push_back(t.get<std::string>());
            }
            spec.replay_log = b.value("replay_log", "");
            spec.record_log = b.value("record_log", "");
            config.backends.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (config.trials < 1) throw ConfigError("trials must be >= 1");
    if (config.backends.empty()) throw ConfigError("at least one backend is required");
    return config;
}

TaskSpec load_task_file(const std::filesystem::path& path) {
    const json doc = parse_json_file(path);
    TaskSpec task;
    try {
        task.task_id = doc.at("task_id").get<std::string>();
        task.objective = doc.at("objective").get<std::string>();
        task.context = doc.at("context").get<std::string>();
        task.format_instruction = doc.at("format_instruction").get<std::string>();
        for (const auto& label : doc.at("label_set")) task.label_set.push_back(label.get<std::string>());
        for (const auto& f : doc.value("subject_metadata_fields", json::array())) {
            task.subject_metadata_fields.push_back(f.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const std::vector<std::string> violations = task.validate();
    if (!violations.empty()) {
        std::string msg = path.string() + ": invalid task";
        for (const auto& v : violations) msg += "; " + v;
        throw ConfigError(msg);
    }
    return task;
}

std::string config_fingerprint(const RunConfig& config, const TaskSpec& task, const PromptTemplate& tmpl) {
    nlohmann::ordered_json doc;
    doc["task_id"] = task.task_id;
    doc["template_version"] = tmpl.version;
    doc["manifest"] = config.manifest_path;
    doc["strategy"] = std::string(strategy_name(config.plan.kind));
    doc["chunk_s"] = config.plan.chunk.count();
    if (config.plan.evaluation_window) doc["evaluation_window_s"] = config.plan.evaluation_window->count();
    if (config.plan.history) {
        doc["t0_s"] = config.plan.history->latest.count();
        doc["tn_s"] = config.plan.history->history.count();
        nlohmann::ordered_json tns = nlohmann::ordered_json::array();
        for (const Seconds s : config.plan.history->candidate_histories) tns.push_back(s.count());
        doc["candidate_tns_s"] = tns;
    }
    doc["mode"] = std::string(mode_name(config.mode));
    doc["trials"] = config.trials;
    doc["privacy_enforce"] = config.policy.enforce;
    doc["seed"] = config.seed;
    doc["hedge_phrases"] = config.hedge_phrases;
    nlohmann::ordered_json backends = nlohmann::ordered_json::array();
    for (const auto& spec : config.backends) {
        backends.push_back({{"name", spec.config.name},
                            {"role", std::string(role_name(spec.config.role))},
                            {"type", spec.type},
                            {"model_id", spec.config.model_id},
                            {"temperature", spec.config.temperature},
                            {"max_output_tokens", spec.config.max_output_tokens}});
    }
    doc["backends"] = backends;
    return hex64(fnv1a64(doc.dump()));
}

std::map<std::string, std::string> config_summary(const RunConfig& config, const TaskSpec& task,
                                                  const PromptTemplate& tmpl) {
    std::map<std::string, std::string> summary;
    summary["task"] = task.task_id;
    summary["template_version"] = tmpl.version;
    summary["strategy"] = std::string(strategy_name(config.plan.kind));
    summary["mode"] = std::string(mode_name(config.mode));
    summary["trials"] = std::to_string(config.trials);
    summary["privacy_enforce"] = config.policy.enforce ? "true" : "false";
    summary["seed"] = std::to_string(config.seed);
    std::string backend_ids;
    std::string temperatures;
    for (const auto& spec : config.backends) {
        if (!backend_ids.empty()) {
            backend_ids += ", ";
            temperatures += ", ";
        }
        backend_ids += spec.config.name + "(" + std::string(role_name(spec.config.role)) + ":" +
                       spec.config.model_id + ")";
        temperatures += spec.config.name + "=" + format_number(spec.config.temperature);
    }
    summary["backends"] = backend_ids;
    summary["temperatures"] = temperatures;
    return summary;
}

RuleFn make_builtin_rule(const std::string& name, const json& params) {
    try {
        if (name == "channel_threshold") return channel_threshold_rule(params);
        if (name == "event_count_threshold") return event_count_threshold_rule(params);
    } catch (const json::exception& e) {
        throw ConfigError("rule '" + name + "': " + e.what());
    }
    throw ConfigError("unknown builtin rule: '" + name + "'");
}

std::vector<std::unique_ptr<Backend>> build_backends(const RunConfig& config) {
    std::vector<std::unique_ptr<Backend>> backends;
    for (const auto& spec : config.backends) {
        std::unique_ptr<Backend> backend;
        if (spec.type == "http") {
            if (spec.config.endpoint_url.empty()) {
                throw ConfigError("backend '" + spec.config.name + "': http backends need endpoint_url");
            }
            backend = make_http_backend(spec.config);
        } else if (spec.type == "rule") {
            backend = make_rule_backend(spec.config, make_builtin_rule(spec.rule, spec.rule_params));
        } else if (spec.type == "scripted") {
            backend = make_scripted_backend(spec.config, spec.transcript);
        } else if (spec.type == "replay") {
            backend = make_replay_backend(spec.config, config.resolve(spec.replay_log));
        } else {
            throw ConfigError("backend '" + spec.config.name + "': unknown type '" + spec.type + "'");
        }
        if (!spec.record_log.empty()) {
            backend = make_recording_backend(std::move(backend), config.resolve(spec.record_log));
        }
        backends.push_back(std::move(backend));
    }
    return backends;
}

std::vector<Backend*> backend_pointers(const std::vector<std::unique_ptr<Backend>>& owned) {
    std::vector<Backend*> out;
    out.reserve(owned.size());
    for (const auto& b : owned) out.push_back(b.get());
    return out;
}

}  // namespace sentrace
