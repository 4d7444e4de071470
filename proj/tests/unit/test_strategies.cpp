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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "sentrace/evaluate.hpp"
#include "sentrace/strategy.hpp"
#include "support/synthetic.hpp"

using namespace sentrace;
using sentrace::test::at;

namespace {

StrategyContext occupancy_context(const TaskSpec& task, int trials = 5) {
    StrategyContext ctx;
    ctx.task = &task;
    ctx.reasoning_template = template_from_task(task);
    ctx.utc_offset_minutes = 0;
    ctx.trials = trials;
    return ctx;
}

StageBackends stage_backends(Backend* summarizer, Backend* reasoner) {
    StageBackends stages;
    stages.summarizer = summarizer;
    stages.reasoner = reasoner;
    return stages;
}

Sample one_occupancy_sample(bool occupied = true) {
    test::OccupancyOptions opts;
    opts.sample_count = 2;
    return test::generate_occupancy_samples(opts)[occupied ? 0 : 1];
}

/// Summarizer that tags its output with the caption window, reasoner that
/// always answers occupied.
std::unique_ptr<Backend> echo_window_summarizer() {
    BackendConfig config;
    config.name = "echo-summarizer";
    config.role = BackendRole::Edge;
    return make_rule_backend(config, [](const std::string&, const std::string& user) {
        const std::size_t pos = user.find("Data from ");
        const std::size_t eol = user.find('\n', pos);
        return "SUM(" + user.substr(pos, eol - pos) + ")";
    });
}

std::unique_ptr<Backend> fixed_reasoner(const std::string& reply, BackendRole role = BackendRole::Cloud) {
    BackendConfig config;
    config.name = "fixed-reasoner";
    config.role = role;
    return make_rule_backend(config, [reply](const std::string&, const std::string&) { return reply; });
}

}  // namespace

TEST_CASE("select_history: the anchored 30-minute/6-hour split") {
    HistoryConfig cfg;
    cfg.latest = Seconds{30 * 60};
    cfg.history = Seconds{6 * 3600};
    const auto [raw, history] = select_history(at(12, 0), cfg);
    CHECK(raw.start == at(11, 30));
    CHECK(raw.end == at(12, 0));
    CHECK(history.start == at(5, 30));
    CHECK(history.end == at(11, 30));
}

TEST_CASE("select_history: zero history leaves only the latest window") {
    HistoryConfig cfg;
    cfg.latest = Seconds{30 * 60};
    cfg.history = Seconds{0};
    const auto [raw, history] = select_history(at(12, 0), cfg);
    CHECK(raw.duration() == Seconds{1800});
    CHECK(history.empty());
    CHECK(history.start == history.end);
}

TEST_CASE("property: raw and history windows are disjoint, contiguous, exact") {
    std::mt19937 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const Timestamp ref{std::uniform_int_distribution<std::int64_t>(1'000'000, 2'000'000'000)(rng)};
        HistoryConfig cfg;
        cfg.latest = Seconds{std::uniform_int_distribution<std::int64_t>(1, 86400)(rng)};
        cfg.history = Seconds{std::uniform_int_distribution<std::int64_t>(0, 30 * 86400)(rng)};
        const auto [raw, history] = select_history(ref, cfg);
        REQUIRE(raw.duration() == cfg.latest);
        REQUIRE(history.duration() == cfg.history);
        REQUIRE(history.end == raw.start);   // contiguous, no overlap
        REQUIRE(raw.end == ref);
        REQUIRE(raw.end - history.start == Seconds{cfg.latest.count() + cfg.history.count()});
    }
}

TEST_CASE("summarize_chunks: a 28-day trace in 7-day chunks yields 4 summaries partitioning the span") {
    Sample sample;
    sample.sample_id = "subject0";
    sample.trace = test::generate_activity_trace(28, 11);
    sample.ground_truth = "typical";
    sample.reference_time = Timestamp{test::kBaseEpoch + 28 * 86400};

    const TaskSpec task = test::routine_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: typical");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    const auto summaries = summarize_chunks(sample, Seconds{7 * 86400}, stages, ctx);
    REQUIRE(summaries.size() == 4);
    const TimeWindow span = sample.perception().span();
    CHECK(summaries.front().window.start == span.start);
    CHECK(summaries.back().window.end == span.end);
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        CHECK(summaries[i].block.taint == Taint::Summary);
        CHECK(summaries[i].block.source_window == summaries[i].window);
        if (i) CHECK(summaries[i].window.start == summaries[i - 1].window.end);  // disjoint and contiguous
        // The mock echoes its caption; the recorded window must match it.
        CHECK(summaries[i].block.text.find(format_wallclock(summaries[i].window.start, 0)) != std::string::npos);
    }
}

TEST_CASE("summarize_chunks: a trace shorter than one chunk yields exactly one summary") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    const auto summaries = summarize_chunks(sample, Seconds{30 * 86400}, stages, ctx);
    REQUIRE(summaries.size() == 1);
    CHECK(summaries[0].window == sample.sensor().span());
}

TEST_CASE("summarize_then_reason: the final prompt holds only summary blocks") {
    Sample sample;
    sample.sample_id = "subject0";
    sample.trace = test::generate_activity_trace(28, 11);
    sample.ground_truth = "typical";
    sample.reference_time = Timestamp{test::kBaseEpoch + 28 * 86400};
    sample.subject_metadata["age"] = "74";

    const TaskSpec task = test::routine_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: typical");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SummarizeThenReason;  // default 7d chunk for perception traces
    const ReasoningResult result = summarize_then_reason(sample, plan, stages, ctx);

    CHECK(result.intermediate_summaries.size() == 4);
    REQUIRE(result.final_prompt.blocks.size() == 4);
    for (const auto& block : result.final_prompt.blocks) CHECK(block.taint == Taint::Summary);
    CHECK(result.trials.size() == 5);
    CHECK(result.stage_latency_ms.count("summarize") == 1);
    CHECK(result.stage_latency_ms.count("reason") == 1);
    CHECK(result.stage_backend.at("summarize") == "echo-summarizer");
    CHECK(result.stage_backend.at("reason") == "fixed-reasoner");
}

TEST_CASE("summarize_then_reason: a single-chunk trace is summarize once, reason once") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task, 1);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SummarizeThenReason;
    plan.chunk = Seconds{30 * 86400};
    const ReasoningResult result = summarize_then_reason(sample, plan, stages, ctx);
    CHECK(result.intermediate_summaries.size() == 1);
    CHECK(result.trials.size() == 1);
}

TEST_CASE("summarize_then_reason end-to-end against the generating rule") {
    // Summaries count walking events per chunk; the reasoner thresholds the
    // total. The dataset was generated from the same rule, so majority
    // answers must match ground truth on every sample.
    const TaskSpec task = test::routine_task();
    StrategyContext ctx = occupancy_context(task);

    BackendConfig edge;
    edge.name = "walk-summarizer";
    edge.role = BackendRole::Edge;
    auto summarizer = make_rule_backend(edge, make_builtin_rule("event_count_threshold",
                                                                {{"label", "walking"},
                                                                 {"threshold", 250},
                                                                 {"above_label", "atypical"},
                                                                 {"below_label", "typical"}}));
    BackendConfig cloud;
    cloud.name = "walk-reasoner";
    cloud.role = BackendRole::Cloud;
    auto reasoner = make_rule_backend(cloud, make_builtin_rule("event_count_threshold",
                                                               {{"label", "walking"},
                                                                {"threshold", 250},
                                                                {"above_label", "atypical"},
                                                                {"below_label", "typical"}}));
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SummarizeThenReason;
    int correct = 0;
    const auto samples = test::generate_routine_samples(8);
    for (const auto& sample : samples) {
        const ReasoningResult result = summarize_then_reason(sample, plan, stages, ctx);
        std::vector<ParsedAnswer> answers;
        for (const auto& t : result.trials) answers.push_back(parse_answer(t.response_text, task.label_set));
        if (verdict(answers, sample.ground_truth).correct) ++correct;
    }
    CHECK(correct == 8);
}

TEST_CASE("selective_history: summary block then raw block") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SelectiveHistory;
    plan.history = HistoryConfig{};  // 30m / 6h
    const ReasoningResult result = selective_history_reason(sample, plan, stages, ctx);

    REQUIRE(result.final_prompt.blocks.size() == 2);
    CHECK(result.final_prompt.blocks[0].taint == Taint::Summary);
    CHECK(result.final_prompt.blocks[1].taint == Taint::Raw);
    CHECK(result.final_prompt.blocks[0].source_window == TimeWindow{at(5, 30), at(11, 30)});
    CHECK(result.final_prompt.blocks[1].source_window.end.epoch_seconds <= at(12, 0).epoch_seconds);
    REQUIRE(result.intermediate_summaries.size() == 1);
    CHECK(result.intermediate_summaries[0].block.taint == Taint::Summary);
}

TEST_CASE("selective_history: no history data leaves one raw block with a note") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SelectiveHistory;
    HistoryConfig cfg;
    cfg.latest = Seconds{30 * 60};
    cfg.history = Seconds{30 * 86400};  // reaches far before any data
    plan.history = cfg;

    Sample trimmed = sample;
    trimmed.trace = window(sample.sensor(), at(11, 30), at(12, 0));
    const ReasoningResult result = selective_history_reason(trimmed, plan, stages, ctx);
    REQUIRE(result.final_prompt.blocks.size() == 1);
    CHECK(result.final_prompt.blocks[0].taint == Taint::Raw);
    CHECK(result.final_prompt.text.find("no prior data available") != std::string::npos);
    CHECK(result.intermediate_summaries.empty());
    CHECK(result.stage_latency_ms.count("summarize") == 0);
}

TEST_CASE("selective_history: an empty latest window is an error") {
    Sample sample = one_occupancy_sample();
    sample.reference_time = at(12, 0) + Seconds{7200};  // data ends at 12:00
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SelectiveHistory;
    plan.history = HistoryConfig{};
    CHECK_THROWS_AS(selective_history_reason(sample, plan, stages, ctx), EmptyRawWindow);
}

TEST_CASE("adaptive_history picks the most consistent candidate") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);

    // The reasoner keys its (in)consistency off the history caption: the
    // 3h candidate gets a flip-flopping answer, the 6h candidate a stable
    // one.
    BackendConfig cfg;
    cfg.name = "keyed-reasoner";
    cfg.role = BackendRole::Cloud;
    auto counter = std::make_shared<std::atomic<int>>(0);
    auto reasoner = make_rule_backend(cfg, [counter](const std::string&, const std::string& user) {
        if (user.find("Data from 2023-01-02 08:30") != std::string::npos) {  // 3h history window
            return std::string(counter->fetch_add(1) % 2 == 0 ? "Answer: occupied" : "Answer: unoccupied");
        }
        return std::string("Answer: occupied");
    });
    auto summarizer = echo_window_summarizer();
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::AdaptiveHistory;
    HistoryConfig cfg2;
    cfg2.latest = Seconds{30 * 60};
    cfg2.candidate_histories = {Seconds{3 * 3600}, Seconds{6 * 3600}};
    plan.history = cfg2;

    const ReasoningResult result = adaptive_history(sample, plan, stages, ctx);
    // 6h candidate: 5/5 occupied; 3h candidate: 3/2 split.
    REQUIRE(result.adaptive_scores.size() == 2);
    CHECK(result.adaptive_scores[0] == std::pair<Seconds, int>{Seconds{3 * 3600}, 3});
    CHECK(result.adaptive_scores[1] == std::pair<Seconds, int>{Seconds{6 * 3600}, 5});
    CHECK(result.intermediate_summaries[0].window == TimeWindow{at(5, 30), at(11, 30)});
}

TEST_CASE("adaptive_history breaks score ties toward the smallest TN") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::AdaptiveHistory;
    HistoryConfig cfg;
    cfg.latest = Seconds{30 * 60};
    cfg.candidate_histories = {Seconds{6 * 3600}, Seconds{3 * 3600}};  // larger first
    plan.history = cfg;

    const ReasoningResult result = adaptive_history(sample, plan, stages, ctx);
    // Both candidates are 5/5; the 3h history window [08:30, 11:30) wins.
    CHECK(result.intermediate_summaries[0].window == TimeWindow{at(8, 30), at(11, 30)});
}

TEST_CASE("adaptive_history with a single candidate equals selective_history") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan adaptive;
    adaptive.kind = StrategyKind::AdaptiveHistory;
    HistoryConfig cfg;
    cfg.candidate_histories = {Seconds{6 * 3600}};
    adaptive.history = cfg;
    const ReasoningResult a = adaptive_history(sample, adaptive, stages, ctx);

    auto summarizer2 = echo_window_summarizer();
    auto reasoner2 = fixed_reasoner("Answer: occupied");
    StageBackends stages2 = stage_backends(summarizer2.get(), reasoner2.get());
    StrategyPlan selective;
    selective.kind = StrategyKind::SelectiveHistory;
    selective.history = HistoryConfig{};
    const ReasoningResult b = selective_history_reason(sample, selective, stages2, ctx);

    CHECK(a.final_prompt.text == b.final_prompt.text);
    CHECK(a.adaptive_scores.size() == 1);
}

TEST_CASE("stage latencies sum to the recorded total") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task);
    auto summarizer = echo_window_summarizer();
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SelectiveHistory;
    plan.history = HistoryConfig{};
    const ReasoningResult result = selective_history_reason(sample, plan, stages, ctx);
    double sum = 0.0;
    for (const auto& [stage, ms] : result.stage_latency_ms) sum += ms;
    CHECK(result.total_latency_ms == doctest::Approx(sum));
}

TEST_CASE("the summarization prompt forbids final answers and reuses the task context") {
    Sample sample = one_occupancy_sample();
    const TaskSpec task = test::occupancy_task();
    StrategyContext ctx = occupancy_context(task, 1);

    std::string seen_summarize_prompt;
    BackendConfig cfg;
    cfg.name = "spy";
    cfg.role = BackendRole::Edge;
    auto summarizer = make_rule_backend(cfg, [&seen_summarize_prompt](const std::string&, const std::string& user) {
        seen_summarize_prompt = user;
        return "- quiet, low co2.";
    });
    auto reasoner = fixed_reasoner("Answer: occupied");
    StageBackends stages = stage_backends(summarizer.get(), reasoner.get());

    StrategyPlan plan;
    plan.kind = StrategyKind::SelectiveHistory;
    plan.history = HistoryConfig{};
    selective_history_reason(sample, plan, stages, ctx);

    CHECK(seen_summarize_prompt.find("Do not state a conclusion") != std::string::npos);
    CHECK(seen_summarize_prompt.find("CO2 rises quickly") != std::string::npos);  // task context present
    CHECK(seen_summarize_prompt.find("Answer: ") == std::string::npos);           // no answer-line cue
}
