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

#include "sentrace/orchestrate.hpp"

#include <atomic>
#include <chrono>
#include <thread>

namespace sentrace {

namespace {

Backend* find_backend(const std::vector<Backend*>& backends, BackendRole role) {
    for (Backend* b : backends) {
        if (b && b->config().role == role) return b;
    }
    return nullptr;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

ParsedAnswer parse_trial(const ChatExchange& exchange, const TaskSpec& task,
                         const std::vector<std::string>& hedge_phrases) {
    if (exchange.finish_reason.rfind("error:", 0) == 0) {
        return ParsedAnswer::failure(exchange.finish_reason);
    }
    return parse_answer(exchange.response_text, task.label_set, hedge_phrases);
}

SampleVerdict verdict_for(const Sample& sample, const ReasoningResult& result, const TaskSpec& task,
                          const std::vector<std::string>& hedge_phrases) {
    std::vector<ParsedAnswer> answers;
    answers.reserve(result.trials.size());
    for (const auto& trial : result.trials) answers.push_back(parse_trial(trial, task, hedge_phrases));
    SampleVerdict v = verdict(answers, sample.ground_truth);
    v.sample_id = sample.sample_id;
    v.stage_latency_ms = result.stage_latency_ms;
    v.total_latency_ms = result.total_latency_ms;
    return v;
}

SampleVerdict failed_verdict(const Sample& sample, const std::string& why) {
    SampleVerdict v;
    v.sample_id = sample.sample_id;
    v.ground_truth = sample.ground_truth;
    v.majority = ParsedAnswer::failure(why);
    v.note = why;
    return v;
}

}  // namespace

PrivacyViolation::PrivacyViolation(const TimeWindow& block_window)
    : Error("raw data block covering epoch [" + std::to_string(block_window.start.epoch_seconds) + ", " +
            std::to_string(block_window.end.epoch_seconds) + ") would reach a cloud backend in edge-cloud mode"),
      window_(block_window) {}

BackendUnavailable::BackendUnavailable(BackendRole role)
    : Error("no backend configured for role '" + std::string(role_name(role)) + "'") {}

std::string_view mode_name(DeploymentMode mode) {
    switch (mode) {
        case DeploymentMode::Edge: return "edge";
        case DeploymentMode::Cloud: return "cloud";
        case DeploymentMode::EdgeCloud: return "edge_cloud";
    }
    return "edge";
}

DeploymentMode mode_from_name(std::string_view name) {
    if (name == "edge") return DeploymentMode::Edge;
    if (name == "cloud") return DeploymentMode::Cloud;
    if (name == "edge_cloud" || name == "edge-cloud") return DeploymentMode::EdgeCloud;
    throw Error("unknown deployment mode: '" + std::string(name) + "'");
}

BackendRole summarizer_role(DeploymentMode mode) {
    return mode == DeploymentMode::Cloud ? BackendRole::Cloud : BackendRole::Edge;
}

BackendRole reasoner_role(DeploymentMode mode) {
    return mode == DeploymentMode::Edge ? BackendRole::Edge : BackendRole::Cloud;
}

ReasoningResult run_pipeline(const Sample& sample, const TaskSpec& task, const StrategyPlan& plan,
                             DeploymentMode mode, const std::vector<Backend*>& backends, const PrivacyPolicy& policy,
                             const PipelineOptions& opts) {
    Backend* summarizer = find_backend(backends, summarizer_role(mode));
    if (!summarizer) throw BackendUnavailable(summarizer_role(mode));
    Backend* reasoner = find_backend(backends, reasoner_role(mode));
    if (!reasoner) throw BackendUnavailable(reasoner_role(mode));

    StageBackends stages;
    stages.summarizer = summarizer;
    stages.reasoner = reasoner;
    stages.before_send = [enforce = policy.enforce, mode](const AssembledPrompt& prompt, const Backend& target) {
        if (!enforce || mode != DeploymentMode::EdgeCloud) return;
        if (target.config().role != BackendRole::Cloud) return;
        for (const DataBlock& block : prompt.blocks) {
            if (block.taint == Taint::Raw) throw PrivacyViolation(block.source_window);
        }
    };

    StrategyContext ctx;
    ctx.task = &task;
    ctx.reasoning_template = opts.reasoning_template;
    ctx.utc_offset_minutes = opts.utc_offset_minutes;
    ctx.trials = opts.trials;

    const auto t0 = std::chrono::steady_clock::now();
    ReasoningResult result = run_strategy(sample, plan, stages, ctx);
    result.overhead_ms = std::max(0.0, elapsed_ms(t0) - result.total_latency_ms);
    return result;
}

MetricsReport evaluate_samples(const std::vector<Sample>& samples, const TaskSpec& task, const StrategyPlan& plan,
                               DeploymentMode mode, const std::vector<Backend*>& backends,
                               const PrivacyPolicy& policy, const PipelineOptions& opts,
                               const std::string& config_fingerprint,
                               std::map<std::string, std::string> config_summary) {
    if (samples.empty()) throw EmptyEvaluation("no samples to evaluate");

    int cap_sum = 0;
    for (const Backend* b : backends) cap_sum += b ? b->config().max_concurrency : 0;
    const std::size_t workers = std::min(
        samples.size(),
        static_cast<std::size_t>(opts.workers > 0 ? opts.workers : std::max(1, 2 * cap_sum)));

    std::vector<std::exception_ptr> errors(samples.size());
    std::vector<ReasoningResult> results(samples.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            try {
                results[i] = run_pipeline(samples[i], task, plan, mode, backends, policy, opts);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::vector<SampleVerdict> verdicts;
    verdicts.reserve(samples.size());
    std::size_t failures = 0;
    std::string last_failure;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!errors[i]) {
            verdicts.push_back(verdict_for(samples[i], results[i], task, opts.hedge_phrases));
            continue;
        }
        try {
            std::rethrow_exception(errors[i]);
        } catch (const PrivacyViolation&) {
            throw;  // a policy breach poisons the whole run
        } catch (const BackendUnavailable&) {
            throw;
        } catch (const Error& e) {
            ++failures;
            last_failure = e.what();
            verdicts.push_back(failed_verdict(samples[i], e.what()));
        }
    }
    if (failures == samples.size()) {
        throw BackendError("every sample failed; last: " + last_failure);
    }

    config_summary["mode"] = std::string(mode_name(mode));
    config_summary["strategy"] = std::string(strategy_name(plan.kind));
    return aggregate(verdicts, config_fingerprint, config_summary);
}

std::vector<std::pair<DeploymentMode, MetricsReport>> compare_modes(
    const std::vector<Sample>& samples, const TaskSpec& task, const StrategyPlan& plan,
    const std::vector<Backend*>& backends, const PrivacyPolicy& policy, const PipelineOptions& opts,
    const std::string& config_fingerprint, const std::map<std::string, std::string>& config_summary) {
    for (const BackendRole role : {BackendRole::Edge, BackendRole::Cloud}) {
        if (!find_backend(backends, role)) throw BackendUnavailable(role);
    }
    std::vector<std::pair<DeploymentMode, MetricsReport>> reports;
    for (const DeploymentMode mode : {DeploymentMode::Edge, DeploymentMode::Cloud, DeploymentMode::EdgeCloud}) {
        reports.emplace_back(mode, evaluate_samples(samples, task, plan, mode, backends, policy, opts,
                                                    config_fingerprint, config_summary));
    }
    return reports;
}

}  // namespace sentrace
