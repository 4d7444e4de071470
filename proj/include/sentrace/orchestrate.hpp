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

#include <vector>

#include "sentrace/evaluate.hpp"
#include "sentrace/strategy.hpp"

namespace sentrace {

/// Which backend role serves each stage. Edge keeps everything local,
/// Cloud sends everything out, EdgeCloud summarizes locally and reasons
/// remotely so raw data never leaves the device.
enum class DeploymentMode { Edge, Cloud, EdgeCloud };

std::string_view mode_name(DeploymentMode mode);
DeploymentMode mode_from_name(std::string_view name);

BackendRole summarizer_role(DeploymentMode mode);
BackendRole reasoner_role(DeploymentMode mode);

struct PrivacyPolicy {
    bool enforce = true;
};

/// Raised before any network send when a Raw block is about to leave for a
/// cloud backend in EdgeCloud mode.
class PrivacyViolation : public Error {
public:
    explicit PrivacyViolation(const TimeWindow& block_window);
    const TimeWindow& block_window() const { return window_; }

private:
    TimeWindow window_;
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(BackendRole role);
};

struct PipelineOptions {
    PromptTemplate reasoning_template;
    int utc_offset_minutes = 0;
    int trials = 5;
    int workers = 0;  // 0 = twice the summed backend concurrency caps
    std::vector<std::string> hedge_phrases = default_hedge_phrases();
};

/// Routes the strategy's stages to backends per the deployment mode, with
/// the privacy gate installed ahead of every send.
ReasoningResult run_pipeline(const Sample& sample, const TaskSpec& task, const StrategyPlan& plan,
                             DeploymentMode mode, const std::vector<Backend*>& backends, const PrivacyPolicy& policy,
                             const PipelineOptions& opts);

/// Evaluates every sample under one mode. Samples run concurrently up to
/// the worker limit; verdicts come back in sample order. Privacy
/// violations abort the run; other per-sample failures are recorded and
/// skipped.
MetricsReport evaluate_samples(const std::vector<Sample>& samples, const TaskSpec& task, const StrategyPlan& plan,
                               DeploymentMode mode, const std::vector<Backend*>& backends,
                               const PrivacyPolicy& policy, const PipelineOptions& opts,
                               const std::string& config_fingerprint,
                               std::map<std::string, std::string> config_summary);

/// Runs the identical sample set through Edge, Cloud, and EdgeCloud.
std::vector<std::pair<DeploymentMode, MetricsReport>> compare_modes(
    const std::vector<Sample>& samples, const TaskSpec& task, const StrategyPlan& plan,
    const std::vector<Backend*>& backends, const PrivacyPolicy& policy, const PipelineOptions& opts,
    const std::string& config_fingerprint, const std::map<std::string, std::string>& config_summary);

}  // namespace sentrace
