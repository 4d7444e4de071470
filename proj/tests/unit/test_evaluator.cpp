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

#include <array>

#include "sentrace/evaluate.hpp"

using namespace sentrace;

namespace {

const std::vector<std::string> kLabels = {"occupied", "unoccupied"};

ParsedAnswer answer_a() { return ParsedAnswer::make_label("A", ""); }
ParsedAnswer answer_b() { return ParsedAnswer::make_label("B", ""); }
ParsedAnswer answer_u() { return ParsedAnswer::uncertain(""); }

// ---------------------------------------------------------------------------
// Independent oracle for the five-trial protocol, written straight from the
// definitions: consistent when at least ceil(4n/5) trials share one result,
// majority is the value that beats every other value's count, an
// indecisive majority counts as uncertain.

struct OracleVerdict {
    std::string majority_key;
    bool consistent;
    bool uncertain;
    bool correct;
};

OracleVerdict oracle(const std::vector<std::string>& trial_keys, const std::string& truth_key) {
    const int n = static_cast<int>(trial_keys.size());
    const int bar = (4 * n % 5 == 0) ? 4 * n / 5 : 4 * n / 5 + 1;

    bool consistent = false;
    for (int i = 0; i < n; ++i) {
        int same = 0;
        for (int j = 0; j < n; ++j) {
            if (trial_keys[j] == trial_keys[i]) ++same;
        }
        if (same >= bar) consistent = true;
    }

    std::string majority_key = "uncertain";
    for (int i = 0; i < n; ++i) {
        int mine = 0;
        for (int j = 0; j < n; ++j) {
            if (trial_keys[j] == trial_keys[i]) ++mine;
        }
        bool beats_all_others = true;
        for (int j = 0; j < n; ++j) {
            if (trial_keys[j] == trial_keys[i]) continue;
            int theirs = 0;
            for (int k = 0; k < n; ++k) {
                if (trial_keys[k] == trial_keys[j]) ++theirs;
            }
            if (theirs >= mine) beats_all_others = false;
        }
        if (beats_all_others) majority_key = trial_keys[i];
    }

    OracleVerdict v;
    v.majority_key = majority_key;
    v.consistent = consistent;
    v.uncertain = majority_key == "uncertain";
    v.correct = majority_key == truth_key;
    return v;
}

}  // namespace

TEST_CASE("parse rule 1: an explicit answer line wins") {
    const ParsedAnswer a = parse_answer("The data is clear.\nAnswer: occupied", kLabels);
    CHECK(a.kind == ParsedAnswer::Kind::Label);
    CHECK(a.label == "occupied");
    CHECK(a.evidence == "Answer: occupied");

    // Case-insensitive, trailing punctuation tolerated.
    const ParsedAnswer b = parse_answer("answer: UNOCCUPIED.", kLabels);
    CHECK(b.label == "unoccupied");

    // The last answer line wins.
    const ParsedAnswer c = parse_answer("Answer: occupied\nOn reflection...\nAnswer: unoccupied", kLabels);
    CHECK(c.label == "unoccupied");
}

TEST_CASE("parse rule 2: exactly one label in the final paragraph") {
    const ParsedAnswer a = parse_answer("Considering both options.\n\nThe room is clearly occupied now.", kLabels);
    CHECK(a.kind == ParsedAnswer::Kind::Label);
    CHECK(a.label == "occupied");

    // "unoccupied" contains "occupied" but not on a word boundary.
    const ParsedAnswer b = parse_answer("Looks empty.\n\nI believe it is unoccupied.", kLabels);
    CHECK(b.label == "unoccupied");

    // Both labels named: ambiguous.
    const ParsedAnswer c =
        parse_answer("Hard to say.\n\nIt could be occupied or unoccupied depending on the hour.", kLabels);
    CHECK(c.kind == ParsedAnswer::Kind::ParseFailure);
}

TEST_CASE("parse rule 3: hedge phrases mean uncertain") {
    const ParsedAnswer a = parse_answer("There is not enough information to decide.", kLabels);
    CHECK(a.kind == ParsedAnswer::Kind::Uncertain);
    CHECK(a.evidence == "not enough information");
    CHECK(parse_answer("I cannot decide between these.", kLabels).kind == ParsedAnswer::Kind::Uncertain);
    CHECK(parse_answer("The situation is unclear at best.", kLabels).kind == ParsedAnswer::Kind::Uncertain);
}

TEST_CASE("parse rule 4: everything else is a parse failure") {
    CHECK(parse_answer("", kLabels).kind == ParsedAnswer::Kind::ParseFailure);
    CHECK(parse_answer("The weather is nice.", kLabels).kind == ParsedAnswer::Kind::ParseFailure);
}

TEST_CASE("parse_answer is deterministic and total") {
    const std::vector<std::string> inputs = {"", "Answer: occupied", "maybe\n\nmaybe not", "x", "unclear"};
    for (const auto& text : inputs) {
        const ParsedAnswer a = parse_answer(text, kLabels);
        const ParsedAnswer b = parse_answer(text, kLabels);
        CHECK(a.kind == b.kind);
        CHECK(a.label == b.label);
    }
}

TEST_CASE("consistency threshold is ceil(4n/5)") {
    CHECK(consistency_threshold(5) == 4);
    CHECK(consistency_threshold(1) == 1);
    CHECK(consistency_threshold(10) == 8);
    CHECK(consistency_threshold(2) == 2);
    CHECK(consistency_threshold(3) == 3);
    CHECK(consistency_threshold(4) == 4);
    CHECK(consistency_threshold(6) == 5);
    CHECK_THROWS_AS(consistency_threshold(0), Error);
}

TEST_CASE("verdict: four of five agreeing is consistent and correct") {
    const SampleVerdict v = verdict({answer_a(), answer_a(), answer_a(), answer_a(), answer_b()}, "A");
    CHECK(v.consistent);
    CHECK(v.correct);
    CHECK_FALSE(v.uncertain);
    CHECK(v.majority.label == "A");
}

TEST_CASE("verdict: a tie resolves to uncertain") {
    const SampleVerdict v = verdict({answer_a(), answer_a(), answer_b(), answer_b(), answer_u()}, "A");
    CHECK_FALSE(v.consistent);
    CHECK(v.uncertain);
    CHECK_FALSE(v.correct);
    CHECK(v.majority.kind == ParsedAnswer::Kind::Uncertain);
}

TEST_CASE("verdict: five uncertain trials are consistently uncertain") {
    const SampleVerdict v = verdict({answer_u(), answer_u(), answer_u(), answer_u(), answer_u()}, "A");
    CHECK(v.consistent);
    CHECK(v.uncertain);
    CHECK_FALSE(v.correct);
    // Cross-check this case against the oracle.
    const OracleVerdict o = oracle({"uncertain", "uncertain", "uncertain", "uncertain", "uncertain"}, "label:A");
    CHECK(o.consistent == v.consistent);
    CHECK(o.uncertain == v.uncertain);
    CHECK(o.correct == v.correct);
}

TEST_CASE("verdict agrees with the brute-force oracle on all 243 five-trial vectors") {
    const std::array<ParsedAnswer, 3> values = {answer_a(), answer_b(), answer_u()};
    const std::array<std::string, 3> keys = {"label:A", "label:B", "uncertain"};
    int checked = 0;
    for (int code = 0; code < 243; ++code) {
        int c = code;
        std::vector<ParsedAnswer> trials;
        std::vector<std::string> trial_keys;
        for (int i = 0; i < 5; ++i) {
            trials.push_back(values[c % 3]);
            trial_keys.push_back(keys[c % 3]);
            c /= 3;
        }
        const SampleVerdict got = verdict(trials, "A");
        const OracleVerdict want = oracle(trial_keys, "label:A");
        REQUIRE(got.consistent == want.consistent);
        REQUIRE(got.uncertain == want.uncertain);
        REQUIRE(got.correct == want.correct);
        const std::string got_majority =
            got.majority.kind == ParsedAnswer::Kind::Uncertain ? "uncertain" : got.majority.key();
        REQUIRE(got_majority == want.majority_key);
        // Consistent implies a real modal value, never an uncertain tie.
        if (got.consistent) {
            int modal = 0;
            for (const auto& k : trial_keys) {
                if (k == got_majority) ++modal;
            }
            REQUIRE(modal >= 4);
        }
        ++checked;
    }
    CHECK(checked == 243);
}

TEST_CASE("run_trials records per-trial failures and fails only when all fail") {
    AssembledPrompt prompt;
    prompt.text = "p";
    int call = 0;
    const auto flaky = [&call](const AssembledPrompt&) -> ChatExchange {
        if (++call % 2 == 0) throw TransportError("flap");
        ChatExchange e;
        e.response_text = "Answer: occupied";
        return e;
    };
    const auto trials = run_trials(prompt, flaky, 5);
    REQUIRE(trials.size() == 5);
    CHECK(trials[1].finish_reason.rfind("error:", 0) == 0);
    CHECK(trials[0].response_text == "Answer: occupied");

    const auto dead = [](const AssembledPrompt&) -> ChatExchange { throw TransportError("down"); };
    CHECK_THROWS_AS(run_trials(prompt, dead, 3), AllTrialsFailed);
}

TEST_CASE("aggregate computes rates over the sample count") {
    SampleVerdict correct = verdict({answer_a(), answer_a(), answer_a(), answer_a(), answer_a()}, "A");
    SampleVerdict wrong = verdict({answer_b(), answer_b(), answer_b(), answer_a(), answer_a()}, "A");
    SampleVerdict second_correct = correct;
    correct.sample_id = "s0";
    wrong.sample_id = "s1";
    second_correct.sample_id = "s2";
    correct.stage_latency_ms["reason"] = 10.0;
    wrong.stage_latency_ms["reason"] = 20.0;
    second_correct.stage_latency_ms["reason"] = 30.0;
    correct.total_latency_ms = 10.0;
    wrong.total_latency_ms = 20.0;
    second_correct.total_latency_ms = 30.0;

    const MetricsReport report = aggregate({correct, wrong, second_correct}, "fp", {{"mode", "edge"}});
    CHECK(report.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(report.consistency_rate == doctest::Approx(2.0 / 3.0));
    CHECK(report.uncertainty_rate == doctest::Approx(0.0));
    CHECK(report.sample_count == 3);
    CHECK(report.stage_latency.at("reason").mean == doctest::Approx(20.0));
    CHECK(report.stage_latency.at("reason").p50 == doctest::Approx(20.0));
    CHECK(report.stage_latency.at("total").p95 == doctest::Approx(30.0));
    CHECK(report.config_fingerprint == "fp");
}

TEST_CASE("aggregate: all-uncertain datasets score zero accuracy") {
    SampleVerdict u = verdict({answer_u(), answer_u(), answer_u(), answer_u(), answer_u()}, "A");
    u.sample_id = "s0";
    const MetricsReport report = aggregate({u}, "fp", {});
    CHECK(report.uncertainty_rate == doctest::Approx(1.0));
    CHECK(report.accuracy == doctest::Approx(0.0));
}

TEST_CASE("aggregate rejects an empty verdict list") {
    CHECK_THROWS_AS(aggregate({}, "fp", {}), EmptyEvaluation);
}

TEST_CASE("report emission carries verdicts in all three formats") {
    SampleVerdict v = verdict({answer_a(), answer_a(), answer_a(), answer_a(), answer_b()}, "A");
    v.sample_id = "s0";
    v.stage_latency_ms["reason"] = 5.0;
    v.total_latency_ms = 5.0;
    const MetricsReport report = aggregate({v}, "fingerprint123", {{"strategy", "direct"}});

    const std::string json_text = report_to_json(report);
    CHECK(json_text.find("\"fingerprint123\"") != std::string::npos);
    CHECK(json_text.find("\"s0\"") != std::string::npos);
    CHECK(report_to_json(report) == json_text);  // stable bytes

    const std::string csv = report_to_csv(report);
    CHECK(csv.find("sample_id,majority,ground_truth") == 0);
    CHECK(csv.find("s0,A,A,1,1,0,A|A|A|A|B") != std::string::npos);

    const std::string text = report_to_text(report);
    CHECK(text.find("accuracy:         1.0000") != std::string::npos);
    CHECK(text.find("consistency rate: 1.0000") != std::string::npos);
}
