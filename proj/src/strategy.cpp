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

#include "sentrace/strategy.hpp"

#include <algorithm>

#include "sentrace/evaluate.hpp"

namespace sentrace {

namespace {

DataBlock render_any(const Trace& trace, int utc_offset_minutes) {
    const RenderOptions opts{utc_offset_minutes};
    if (std::holds_alternative<SensorTrace>(trace)) {
        return render_sensor_block(std::get<SensorTrace>(trace), opts);
    }
    return render_perception_block(std::get<PerceptionTrace>(trace), opts);
}

bool trace_empty(const Trace& trace) {
    if (std::holds_alternative<SensorTrace>(trace)) return std::get<SensorTrace>(trace).empty();
    return std::get<PerceptionTrace>(trace).empty();
}

TimeWindow trace_span(const Trace& trace) {
    if (std::holds_alternative<SensorTrace>(trace)) return std::get<SensorTrace>(trace).span();
    return std::get<PerceptionTrace>(trace).span();
}

/// The trace portion a whole-trace strategy works on: the configured
/// evaluation window ending at reference_time, or everything.
Trace evaluation_slice(const Sample& sample, const StrategyPlan& plan) {
    if (!plan.evaluation_window) return sample.trace;
    const Timestamp end = sample.reference_time;
    return window(sample.trace, end - *plan.evaluation_window, end);
}

/// Summaries must describe, not decide: the reasoning verdict stays with
/// stage two, which keeps intermediate summaries reusable and inspectable.
PromptTemplate summarization_template(const StrategyContext& ctx) {
    PromptTemplate tmpl;
    tmpl.objective =
        "Summarize the notable patterns in the data below over the stated period. Describe levels, trends and "
        "changes only.";
    tmpl.context = ctx.task->context;
    tmpl.format_instruction =
        "Respond with a concise bullet summary of at most six bullets. Do not state a conclusion or a final "
        "answer for any task.";
    tmpl.version = ctx.reasoning_template.version + "/summarize";
    return tmpl;
}

double sum_latency(const std::vector<ChatExchange>& exchanges) {
    double total = 0.0;
    for (const auto& e : exchanges) total += e.latency_ms;
    return total;
}

ReasoningResult finish_result(ReasoningResult result, const StrategyPlan& plan, const StageBackends& backends,
                              bool used_summarizer) {
    result.strategy_used = plan;
    if (used_summarizer && backends.summarizer) {
        result.stage_backend["summarize"] = backends.summarizer->config().name;
    }
    if (backends.reasoner) result.stage_backend["reason"] = backends.reasoner->config().name;
    result.total_latency_ms = 0.0;
    for (const auto& [stage, ms] : result.stage_latency_ms) result.total_latency_ms += ms;
    return result;
}

std::vector<ChatExchange> reasoning_trials(const AssembledPrompt& prompt, StageBackends& backends, int n) {
    return run_trials(
        prompt, [&backends](const AssembledPrompt& p) { return backends.send_reason(p); }, n);
}

}  // namespace

void HistoryConfig::check() const {
    if (latest.count() <= 0) throw Error("history config: latest window T0 must be positive");
    if (history.count() < 0) throw Error("history config: history window TN must be non-negative");
}

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Direct: return "direct";
        case StrategyKind::SummarizeThenReason: return "summarize_then_reason";
        case StrategyKind::SelectiveHistory: return "selective_history";
        case StrategyKind::AdaptiveHistory: return "adaptive_history";
    }
    return "direct";
}

StrategyKind strategy_from_name(std::string_view name) {
    if (name == "direct") return StrategyKind::Direct;
    if (name == "summarize_then_reason") return StrategyKind::SummarizeThenReason;
    if (name == "selective_history") return StrategyKind::SelectiveHistory;
    if (name == "adaptive_history") return StrategyKind::AdaptiveHistory;
    throw Error("unknown strategy: '" + std::string(name) + "'");
}

ChatExchange StageBackends::send_summarize(const AssembledPrompt& prompt) {
    if (!summarizer) throw Error("no summarizer backend configured");
    if (before_send) before_send(prompt, *summarizer);
    ChatOptions options;
    options.temperature = summarizer->config().summarize_temperature;
    return summarizer->complete(summarizer->config().system_preamble, prompt.text, options);
}

ChatExchange StageBackends::send_reason(const AssembledPrompt& prompt) {
    if (!reasoner) throw Error("no reasoner backend configured");
    if (before_send) before_send(prompt, *reasoner);
    return reasoner->complete(reasoner->config().system_preamble, prompt.text);
}

Seconds default_chunk(const Sample& sample) {
    return sample.is_sensor() ? Seconds{6 * 3600} : Seconds{7 * 86400};
}

std::pair<TimeWindow, TimeWindow> select_history(Timestamp reference_time, const HistoryConfig& cfg) {
    cfg.check();
    const TimeWindow raw{reference_time - cfg.latest, reference_time};
    const TimeWindow history{raw.start - cfg.history, raw.start};
    return {raw, history};
}

std::vector<DataBlock> plan_direct(const Sample& sample, const StrategyPlan& plan, const StrategyContext& ctx) {
    const Trace slice = evaluation_slice(sample, plan);
    if (trace_empty(slice)) throw EmptyTrace("sample '" + sample.sample_id + "': no data in evaluation window");
    return {render_any(slice, ctx.utc_offset_minutes)};
}

std::vector<ChunkSummary> summarize_chunks(const Sample& sample, Seconds chunk_duration, StageBackends& backends,
                                           const StrategyContext& ctx, double* stage_latency_ms,
                                           std::optional<Seconds> evaluation_window) {
    if (chunk_duration.count() <= 0) throw Error("chunk duration must be positive");
    StrategyPlan windowing;
    windowing.evaluation_window = evaluation_window;
    const Trace slice = evaluation_slice(sample, windowing);
    if (trace_empty(slice)) throw EmptyTrace("sample '" + sample.sample_id + "': empty trace");

    const TimeWindow span = trace_span(slice);
    const PromptTemplate tmpl = summarization_template(ctx);

    std::vector<ChunkSummary> summaries;
    double latency = 0.0;
    std::size_t chunk_index = 0;
    for (Timestamp start = span.start; start < span.end;
         start = start + chunk_duration, ++chunk_index) {
        const TimeWindow chunk{start, std::min(start + chunk_duration, span.end)};
        const Trace part = window(slice, chunk.start, chunk.end);
        if (trace_empty(part)) continue;

        const DataBlock raw = render_any(part, ctx.utc_offset_minutes);
        const AssembledPrompt prompt =
            assemble(tmpl, *ctx.task, sample.subject_metadata,
                     {PromptBlock{raw, window_caption(chunk, ctx.utc_offset_minutes)}});
        ChatExchange exchange;
        try {
            exchange = backends.send_summarize(prompt);
        } catch (const Error& e) {
            throw BackendError("summarization of chunk " + std::to_string(chunk_index) + " [" +
                               format_wallclock(chunk.start, ctx.utc_offset_minutes) + ", " +
                               format_wallclock(chunk.end, ctx.utc_offset_minutes) + ") failed: " + e.what());
        }
        latency += exchange.latency_ms;
        summaries.push_back({chunk, make_block(exchange.response_text, Taint::Summary, chunk)});
    }
    if (stage_latency_ms) *stage_latency_ms = latency;
    return summaries;
}

ReasoningResult summarize_then_reason(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                      const StrategyContext& ctx) {
    const Seconds chunk = plan.chunk.count() > 0 ? plan.chunk : default_chunk(sample);

    ReasoningResult result;
    double summarize_ms = 0.0;
    result.intermediate_summaries = summarize_chunks(sample, chunk, backends, ctx, &summarize_ms,
                                                     plan.evaluation_window);
    result.stage_latency_ms["summarize"] = summarize_ms;

    std::vector<DataBlock> blocks;
    blocks.reserve(result.intermediate_summaries.size());
    for (const auto& s : result.intermediate_summaries) blocks.push_back(s.block);

    result.final_prompt = assemble(ctx.reasoning_template, *ctx.task, sample.subject_metadata, blocks,
                                   ctx.utc_offset_minutes);
    result.trials = reasoning_trials(result.final_prompt, backends, ctx.trials);
    result.stage_latency_ms["reason"] = sum_latency(result.trials);
    return finish_result(std::move(result), plan, backends, /*used_summarizer=*/true);
}

ReasoningResult selective_history_reason(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                         const StrategyContext& ctx) {
    if (!plan.history) throw Error("selective history strategy requires a history config");
    const auto [raw_window, history_window] = select_history(sample.reference_time, *plan.history);

    const Trace raw_part = window(sample.trace, raw_window.start, raw_window.end);
    if (trace_empty(raw_part)) {
        throw EmptyRawWindow("sample '" + sample.sample_id + "': no data in latest window [" +
                             format_wallclock(raw_window.start, ctx.utc_offset_minutes) + ", " +
                             format_wallclock(raw_window.end, ctx.utc_offset_minutes) + ")");
    }
    const DataBlock raw_block = render_any(raw_part, ctx.utc_offset_minutes);

    ReasoningResult result;
    std::vector<PromptBlock> blocks;
    const Trace history_part = window(sample.trace, history_window.start, history_window.end);
    if (!trace_empty(history_part)) {
        const DataBlock history_raw = render_any(history_part, ctx.utc_offset_minutes);
        const AssembledPrompt prompt =
            assemble(summarization_template(ctx), *ctx.task, sample.subject_metadata,
                     {PromptBlock{history_raw, window_caption(history_window, ctx.utc_offset_minutes)}});
        const ChatExchange exchange = backends.send_summarize(prompt);
        result.stage_latency_ms["summarize"] = exchange.latency_ms;
        const DataBlock summary = make_block(exchange.response_text, Taint::Summary, history_window);
        result.intermediate_summaries.push_back({history_window, summary});
        // History pattern first, then the latest raw readings.
        blocks.push_back({summary, window_caption(history_window, ctx.utc_offset_minutes)});
        blocks.push_back({raw_block, window_caption(raw_window, ctx.utc_offset_minutes)});
    } else {
        std::string caption = window_caption(raw_window, ctx.utc_offset_minutes);
        caption.pop_back();  // drop the ':'
        blocks.push_back({raw_block, caption + " (no prior data available):"});
    }

    result.final_prompt = assemble(ctx.reasoning_template, *ctx.task, sample.subject_metadata, blocks);
    result.trials = reasoning_trials(result.final_prompt, backends, ctx.trials);
    result.stage_latency_ms["reason"] = sum_latency(result.trials);
    const bool used_summarizer = !result.intermediate_summaries.empty();
    return finish_result(std::move(result), plan, backends, used_summarizer);
}

ReasoningResult adaptive_history(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                                 const StrategyContext& ctx) {
    if (!plan.history || plan.history->candidate_histories.empty()) {
        throw Error("adaptive history strategy requires candidate TN values");
    }

    const auto modal_label_count = [&](const ReasoningResult& result) {
        std::map<std::string, int> counts;
        for (const auto& trial : result.trials) {
            const ParsedAnswer parsed = parse_answer(trial.response_text, ctx.task->label_set);
            if (parsed.kind == ParsedAnswer::Kind::Label) ++counts[parsed.label];
        }
        int best = 0;
        for (const auto& [label, count] : counts) best = std::max(best, count);
        return best;
    };

    std::optional<ReasoningResult> best;
    Seconds best_tn{0};
    int best_score = -1;
    std::vector<std::pair<Seconds, int>> scores;
    std::string last_error;
    for (const Seconds tn : plan.history->candidate_histories) {
        StrategyPlan candidate = plan;
        candidate.kind = StrategyKind::SelectiveHistory;
        candidate.history->history = tn;
        candidate.history->candidate_histories.clear();
        try {
            ReasoningResult result = selective_history_reason(sample, candidate, backends, ctx);
            const int score = modal_label_count(result);
            scores.emplace_back(tn, score);
            if (score > best_score || (score == best_score && best && tn < best_tn)) {
                best = std::move(result);
                best_tn = tn;
                best_score = score;
            }
        } catch (const Error& e) {
            scores.emplace_back(tn, -1);
            last_error = e.what();
        }
    }
    if (!best) {
        throw Error("all adaptive history candidates failed; last: " + last_error);
    }
    best->adaptive_scores = std::move(scores);
    best->strategy_used = plan;
    return *std::move(best);
}

ReasoningResult run_strategy(const Sample& sample, const StrategyPlan& plan, StageBackends& backends,
                             const StrategyContext& ctx) {
    switch (plan.kind) {
        case StrategyKind::Direct: {
            ReasoningResult result;
            result.final_prompt = assemble(ctx.reasoning_template, *ctx.task, sample.subject_metadata,
                                           plan_direct(sample, plan, ctx), ctx.utc_offset_minutes);
            result.trials = reasoning_trials(result.final_prompt, backends, ctx.trials);
            result.stage_latency_ms["reason"] = sum_latency(result.trials);
            return finish_result(std::move(result), plan, backends, /*used_summarizer=*/false);
        }
        case StrategyKind::SummarizeThenReason: return summarize_then_reason(sample, plan, backends, ctx);
        case StrategyKind::SelectiveHistory: return selective_history_reason(sample, plan, backends, ctx);
        case StrategyKind::AdaptiveHistory: return adaptive_history(sample, plan, backends, ctx);
    }
    throw Error("unknown strategy kind");
}

}  // namespace sentrace
