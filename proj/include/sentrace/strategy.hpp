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

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "sentrace/backend.hpp"
#include "sentrace/prompt.hpp"
#include "sentrace/trace.hpp"

namespace sentrace {

class EmptyRawWindow : public Error {
public:
    using Error::Error;
};

/// Splits the total evaluated duration into a latest raw window of length
/// `latest` and a preceding summarized history window of length `history`.
struct HistoryConfig {
    Seconds latest{30 * 60};        // T0
    Seconds history{6 * 3600};      // TN
    std::vector<Seconds> candidate_histories;  // adaptive selection candidates

    void check() const;
};

enum class StrategyKind { Direct, SummarizeThenReason, SelectiveHistory, AdaptiveHistory };

std::string_view strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(std::string_view name);

struct StrategyPlan {
    StrategyKind kind = StrategyKind::Direct;
    Seconds chunk{0};  // 0 = default for the trace kind (7d perception, 6h sensor)
    std::optional<HistoryConfig> history;
    /// Window ending at reference_time evaluated by Direct and
    /// SummarizeThenReason; unset = whole trace.
    std::optional<Seconds> evaluation_window;
};

struct ChunkSummary {
    TimeWindow window;
    DataBlock block;  // taint is always Summary
};

struct ReasoningResult {
    AssembledPrompt final_prompt;
    std::vector<ChatExchange> trials;
    std::vector<ChunkSummary> intermediate_summaries;
    std::map<std::string, double> stage_latency_ms;      // keys: summarize, reason
    std::map<std::string, std::string> stage_backend;    // stage -> backend name
    StrategyPlan strategy_used;
    std::vector<std::pair<Seconds, int>> adaptive_scores;  // candidate TN -> modal label count
    double total_latency_ms = 0.0;  // sum of stage latencies
    double overhead_ms = 0.0;       // orchestration overhead outside model calls
};

/// The two stage endpoints a strategy talks to. before_send runs ahead of
/// every request and may veto it by throwing (the privacy gate).
struct StageBackends {
    Backend* summarizer = nullptr;
    Backend* reasoner = nullptr;
    std::function<void(const AssembledPrompt&, const Backend&)> before_send;

    ChatExchange send_summarize(const AssembledPrompt& prompt);
    ChatExchange send_reason(const AssembledPrompt& prompt);
};

struct StrategyContext {
    const TaskSpec* task = nullptr;
    PromptTemplate reasoning_template;
    int utc_offset_minutes = 0;
    int trials = 5;
};

Seconds default_chunk(const Sample& sample);

/// raw = [reference - T0, reference), history = [reference - T0 - TN,
/// reference - T0): disjoint, contiguous, exact durations.
std::pair<TimeWindow, TimeWindow> select_history(Timestamp reference_time, const HistoryConfig& cfg);

/// One Raw block over the evaluation window ending at reference_time.
std::vector<DataBlock> plan_direct(const Sample& sample, const StrategyPlan& plan, const StrategyContext& ctx);

/// Splits the trace span into consecutive chunks, summarizes each via the
/// summarizer backend, and returns Summary blocks in time order. Chunks
/// with no data are skipped.
std::vector<ChunkSummary> summarize_chunks(const Sample& sample, Seconds chunk_duration, StageBackends& backends,
                                           const StrategyContext& ctx, double* stage_latency_ms = nullptr,
                                           std::optional<Seconds> evaluation_window = {});

ReasoningResult summarize_then_reason(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                      const StrategyContext& ctx);

ReasoningResult selective_history_reason(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                         const StrategyContext& ctx);

/// Runs selective_history_reason per candidate TN and keeps the most
/// trial-consistent candidate; ties go to the smallest TN.
ReasoningResult adaptive_history(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                 const StrategyContext& ctx);

ReasoningResult run_strategy(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                             const StrategyContext& ctx);

}  // namespace sentrace
