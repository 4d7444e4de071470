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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sentrace/backend.hpp"
#include "sentrace/prompt.hpp"

namespace sentrace {

class EmptyEvaluation : public Error {
public:
    using Error::Error;
};

class AllTrialsFailed : public Error {
public:
    using Error::Error;
};

struct ParsedAnswer {
    enum class Kind { Label, Uncertain, ParseFailure };
    Kind kind = Kind::ParseFailure;
    std::string label;     // meaningful only when kind == Label
    std::string evidence;  // the matched span

    static ParsedAnswer make_label(std::string label, std::string evidence);
    static ParsedAnswer uncertain(std::string evidence);
    static ParsedAnswer failure(std::string evidence = "");

    /// Identity used for counting multiplicities: kind plus label.
    std::string key() const;
    std::string display() const;
};

const std::vector<std::string>& default_hedge_phrases();

/// Three-rule answer extraction: an explicit "Answer: <label>" line wins;
/// otherwise a final paragraph naming exactly one label; otherwise a hedge
/// phrase means the model declined to decide.
ParsedAnswer parse_answer(const std::string& text, const std::vector<std::string>& label_set,
                          const std::vector<std::string>& hedge_phrases = default_hedge_phrases());

/// ceil(4n/5): the "no less than four of five" agreement bar, scaled.
int consistency_threshold(int n);

struct SampleVerdict {
    std::string sample_id;
    std::string ground_truth;
    std::vector<ParsedAnswer> trials;
    ParsedAnswer majority;
    bool consistent = false;
    bool uncertain = false;
    bool correct = false;
    std::map<std::string, double> stage_latency_ms;
    double total_latency_ms = 0.0;
    std::string note;  // non-empty when the sample could not be evaluated
};

/// Majority vote over n trials; ties resolve to Uncertain.
SampleVerdict verdict(const std::vector<ParsedAnswer>& trials, const std::string& ground_truth);

/// Runs the reasoning stage n times with the identical assembled prompt.
/// Per-trial backend errors become ParseFailure placeholders; only a fully
/// failed sample raises AllTrialsFailed.
using ReasonFn = std::function<ChatExchange(const AssembledPrompt&)>;
std::vector<ChatExchange> run_trials(const AssembledPrompt& prompt, const ReasonFn& reason, int n);

struct LatencyStats {
    double mean = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double consistency_rate = 0.0;
    double uncertainty_rate = 0.0;
    std::size_t sample_count = 0;
    std::map<std::string, LatencyStats> stage_latency;  // per stage plus "total"
    std::vector<SampleVerdict> verdicts;
    std::string config_fingerprint;
    std::map<std::string, std::string> config_summary;
};

MetricsReport aggregate(const std::vector<SampleVerdict>& verdicts, const std::string& config_fingerprint,
                        const std::map<std::string, std::string>& config_summary);

std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
std::string report_to_text(const MetricsReport& report);

/// Writes <stem>.json / <stem>.csv / <stem>.txt under out_dir.
void write_report_files(const MetricsReport& report, const std::filesystem::path& out_dir, const std::string& stem);

}  // namespace sentrace
