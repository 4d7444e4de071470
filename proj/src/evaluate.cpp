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

#include "sentrace/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sentrace {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Case-insensitive whole-word occurrence of `needle` inside `haystack`.
bool contains_whole_word(const std::string& haystack_lower, const std::string& needle_lower) {
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(needle_lower, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
        const std::size_t after = pos + needle_lower.size();
        const bool right_ok = after >= haystack_lower.size() || !is_word_char(haystack_lower[after]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

std::string strip_trailing_punct(std::string s) {
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == ',' || s.back() == ';' ||
                          s.back() == '"' || s.back() == '\'' || s.back() == '*')) {
        s.pop_back();
    }
    return trim_copy(s);
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t rank = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()))));
    return values[std::min(rank, values.size()) - 1];
}

}  // namespace

ParsedAnswer ParsedAnswer::make_label(std::string label, std::string evidence) {
    return {Kind::Label, std::move(label), std::move(evidence)};
}

ParsedAnswer ParsedAnswer::uncertain(std::string evidence) {
    return {Kind::Uncertain, "", std::move(evidence)};
}

ParsedAnswer ParsedAnswer::failure(std::string evidence) {
    return {Kind::ParseFailure, "", std::move(evidence)};
}

std::string ParsedAnswer::key() const {
    switch (kind) {
        case Kind::Label: return "label:" + label;
        case Kind::Uncertain: return "uncertain";
        case Kind::ParseFailure: return "parse_failure";
    }
    return "parse_failure";
}

std::string ParsedAnswer::display() const {
    switch (kind) {
        case Kind::Label: return label;
        case Kind::Uncertain: return "(uncertain)";
        case Kind::ParseFailure: return "(parse failure)";
    }
    return "(parse failure)";
}

const std::vector<std::string>& default_hedge_phrases() {
    static const std::vector<std::string> phrases = {
        "cannot determine", "not enough information", "unclear", "insufficient data", "i cannot",
    };
    return phrases;
}

ParsedAnswer parse_answer(const std::string& text, const std::vector<std::string>& label_set,
                          const std::vector<std::string>& hedge_phrases) {
    std::vector<std::string> labels_lower;
    labels_lower.reserve(label_set.size());
    for (const auto& label : label_set) labels_lower.push_back(lowercase(label));

    // Rule 1: an explicit "Answer: <label>" line; the last one wins.
    {
        std::stringstream ss(text);
        std::string line;
        std::string matched_label;
        std::string matched_line;
        while (std::getline(ss, line)) {
            std::string t = trim_copy(line);
            const std::string t_lower = lowercase(t);
            constexpr std::string_view kPrefix = "answer:";
            if (t_lower.rfind(kPrefix, 0) != 0) continue;
            const std::string rest = strip_trailing_punct(trim_copy(t.substr(kPrefix.size())));
            const std::string rest_lower = lowercase(rest);
            for (std::size_t i = 0; i < label_set.size(); ++i) {
                if (rest_lower == labels_lower[i]) {
                    matched_label = label_set[i];
                    matched_line = t;
                    break;
                }
            }
        }
        if (!matched_label.empty()) return ParsedAnswer::make_label(matched_label, matched_line);
    }

    // Rule 2: exactly one label named in the final paragraph.
    {
        const std::string trimmed = trim_copy(text);
        const std::size_t cut = trimmed.rfind("\n\n");
        const std::string paragraph = lowercase(cut == std::string::npos ? trimmed : trimmed.substr(cut + 2));
        std::string found;
        int hits = 0;
        for (std::size_t i = 0; i < label_set.size(); ++i) {
            if (contains_whole_word(paragraph, labels_lower[i])) {
                ++hits;
                found = label_set[i];
            }
        }
        if (hits == 1) return ParsedAnswer::make_label(found, found);
    }

    // Rule 3: a hedge phrase anywhere means the model declined to decide.
    {
        const std::string text_lower = lowercase(text);
        for (const auto& phrase : hedge_phrases) {
            if (text_lower.find(lowercase(phrase)) != std::string::npos) {
                return ParsedAnswer::uncertain(phrase);
            }
        }
    }

    return ParsedAnswer::failure();
}

int consistency_threshold(int n) {
    if (n < 1) throw Error("trial count must be >= 1");
    return (4 * n + 4) / 5;
}

SampleVerdict verdict(const std::vector<ParsedAnswer>& trials, const std::string& ground_truth) {
    if (trials.empty()) throw EmptyEvaluation("verdict requires at least one trial");
    const int n = static_cast<int>(trials.size());

    std::map<std::string, int> counts;
    std::map<std::string, const ParsedAnswer*> representative;
    for (const auto& t : trials) {
        ++counts[t.key()];
        representative.emplace(t.key(), &t);
    }
    int max_count = 0;
    for (const auto& [key, count] : counts) max_count = std::max(max_count, count);
    std::vector<std::string> modal;
    for (const auto& [key, count] : counts) {
        if (count == max_count) modal.push_back(key);
    }

    SampleVerdict v;
    v.ground_truth = ground_truth;
    v.trials = trials;
    if (modal.size() == 1) {
        const ParsedAnswer* rep = representative.at(modal.front());
        v.majority = {rep->kind, rep->label, ""};
    } else {
        v.majority = ParsedAnswer::uncertain("tie across trials");
    }
    v.consistent = max_count >= consistency_threshold(n);
    v.uncertain = v.majority.kind == ParsedAnswer::Kind::Uncertain;
    v.correct = v.majority.kind == ParsedAnswer::Kind::Label && v.majority.label == ground_truth;
    return v;
}

std::vector<ChatExchange> run_trials(const AssembledPrompt& prompt, const ReasonFn& reason, int n) {
    if (n < 1) throw Error("trial count must be >= 1");
    std::vector<ChatExchange> trials;
    trials.reserve(n);
    int failures = 0;
    for (int i = 0; i < n; ++i) {
        try {
            trials.push_back(reason(prompt));
        } catch (const BackendError& e) {
            // Only transport-level flakiness is absorbed per trial;
            // anything else (a privacy veto, a bad plan) aborts the sample.
            ++failures;
            ChatExchange failed;
            failed.user_text = prompt.text;
            failed.finish_reason = std::string("error: ") + e.what();
            trials.push_back(std::move(failed));
        }
    }
    if (failures == n) {
        throw AllTrialsFailed("all " + std::to_string(n) + " trials failed; last: " + trials.back().finish_reason);
    }
    return trials;
}

MetricsReport aggregate(const std::vector<SampleVerdict>& verdicts, const std::string& config_fingerprint,
                        const std::map<std::string, std::string>& config_summary) {
    if (verdicts.empty()) throw EmptyEvaluation("no verdicts to aggregate");

    MetricsReport report;
    report.verdicts = verdicts;
    report.sample_count = verdicts.size();
    report.config_fingerprint = config_fingerprint;
    report.config_summary = config_summary;

    std::size_t correct = 0, consistent = 0, uncertain = 0;
    std::map<std::string, std::vector<double>> per_stage;
    for (const auto& v : verdicts) {
        correct += v.correct ? 1 : 0;
        consistent += v.consistent ? 1 : 0;
        uncertain += v.uncertain ? 1 : 0;
        for (const auto& [stage, ms] : v.stage_latency_ms) per_stage[stage].push_back(ms);
        per_stage["total"].push_back(v.total_latency_ms);
    }
    const double n = static_cast<double>(verdicts.size());
    report.accuracy = static_cast<double>(correct) / n;
    report.consistency_rate = static_cast<double>(consistent) / n;
    report.uncertainty_rate = static_cast<double>(uncertain) / n;

    for (auto& [stage, values] : per_stage) {
        LatencyStats stats;
        double sum = 0.0;
        for (const double v : values) sum += v;
        stats.mean = sum / static_cast<double>(values.size());
        stats.p50 = percentile(values, 0.50);
        stats.p95 = percentile(values, 0.95);
        report.stage_latency[stage] = stats;
    }
    return report;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json doc;
    doc["config_fingerprint"] = report.config_fingerprint;
    doc["config"] = report.config_summary;
    doc["sample_count"] = report.sample_count;
    doc["accuracy"] = report.accuracy;
    doc["consistency_rate"] = report.consistency_rate;
    doc["uncertainty_rate"] = report.uncertainty_rate;
    nlohmann::ordered_json latency;
    for (const auto& [stage, stats] : report.stage_latency) {
        latency[stage] = {{"mean_ms", stats.mean}, {"p50_ms", stats.p50}, {"p95_ms", stats.p95}};
    }
    doc["latency"] = latency;
    nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
    for (const auto& v : report.verdicts) {
        nlohmann::ordered_json trials = nlohmann::ordered_json::array();
        for (const auto& t : v.trials) trials.push_back(t.display());
        nlohmann::ordered_json entry;
        entry["sample_id"] = v.sample_id;
        entry["majority"] = v.majority.display();
        entry["ground_truth"] = v.ground_truth;
        entry["correct"] = v.correct;
        entry["consistent"] = v.consistent;
        entry["uncertain"] = v.uncertain;
        entry["trials"] = trials;
        entry["stage_latency_ms"] = v.stage_latency_ms;
        entry["total_latency_ms"] = v.total_latency_ms;
        if (!v.note.empty()) entry["note"] = v.note;
        verdicts.push_back(entry);
    }
    doc["verdicts"] = verdicts;
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
    std::string out = "sample_id,majority,ground_truth,correct,consistent,uncertain,trials,total_latency_ms\n";
    for (const auto& v : report.verdicts) {
        std::string trials;
        for (std::size_t i = 0; i < v.trials.size(); ++i) {
            if (i) trials += '|';
            trials += v.trials[i].display();
        }
        char latency[32];
        std::snprintf(latency, sizeof(latency), "%.3f", v.total_latency_ms);
        out += v.sample_id + "," + v.majority.display() + "," + v.ground_truth + "," +
               (v.correct ? "1" : "0") + "," + (v.consistent ? "1" : "0") + "," + (v.uncertain ? "1" : "0") + "," +
               trials + "," + latency + "\n";
    }
    return out;
}

std::string report_to_text(const MetricsReport& report) {
    std::ostringstream out;
    char line[128];
    out << "samples:          " << report.sample_count << "\n";
    std::snprintf(line, sizeof(line), "accuracy:         %.4f\n", report.accuracy);
    out << line;
    std::snprintf(line, sizeof(line), "consistency rate: %.4f\n", report.consistency_rate);
    out << line;
    std::snprintf(line, sizeof(line), "uncertainty rate: %.4f\n", report.uncertainty_rate);
    out << line;
    out << "latency (ms):\n";
    for (const auto& [stage, stats] : report.stage_latency) {
        std::snprintf(line, sizeof(line), "  %-10s mean=%.1f p50=%.1f p95=%.1f\n", stage.c_str(), stats.mean,
                      stats.p50, stats.p95);
        out << line;
    }
    out << "config fingerprint: " << report.config_fingerprint << "\n";
    for (const auto& [key, value] : report.config_summary) {
        out << "  " << key << ": " << value << "\n";
    }
    return out.str();
}

void write_report_files(const MetricsReport& report, const std::filesystem::path& out_dir, const std::string& stem) {
    std::filesystem::create_directories(out_dir);
    const auto write = [&](const std::string& ext, const std::string& content) {
        const std::filesystem::path path = out_dir / (stem + ext);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write report: " + path.string());
        out << content;
    };
    write(".json", report_to_json(report));
    write(".csv", report_to_csv(report));
    write(".txt", report_to_text(report));
}

}  // namespace sentrace
