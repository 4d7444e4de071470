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

#include "sentrace/cli.hpp"

#include <cstdio>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "sentrace/ingest.hpp"

namespace sentrace {

namespace {

struct LoadedExperiment {
    TaskSpec task;
    PromptTemplate tmpl;
    DatasetManifest manifest;
    std::vector<Sample> samples;
    std::vector<std::string> warnings;
    std::string fingerprint;
    std::map<std::string, std::string> summary;
};

LoadedExperiment load_experiment(const RunConfig& config) {
    LoadedExperiment exp;
    exp.task = load_task_file(config.resolve(config.task_path));
    exp.tmpl = config.template_path.empty() ? template_from_task(exp.task)
                                            : load_template_file(config.resolve(config.template_path));
    const std::vector<std::string> violations = validate(exp.tmpl, exp.task);
    if (!violations.empty()) {
        std::string msg = "invalid prompt template (version " + exp.tmpl.version + ")";
        for (const auto& v : violations) msg += "; " + v;
        throw ConfigError(msg);
    }
    LoadOptions opts;
    opts.strict = config.strict;
    std::tie(exp.manifest, exp.samples) =
        load_manifest(config.resolve(config.manifest_path), exp.task, opts, &exp.warnings);
    exp.fingerprint = config_fingerprint(config, exp.task, exp.tmpl);
    exp.summary = config_summary(config, exp.task, exp.tmpl);
    return exp;
}

PipelineOptions pipeline_options(const RunConfig& config, const LoadedExperiment& exp) {
    PipelineOptions opts;
    opts.reasoning_template = exp.tmpl;
    opts.utc_offset_minutes = exp.manifest.utc_offset_minutes;
    opts.trials = config.trials;
    opts.workers = config.workers;
    opts.hedge_phrases = config.hedge_phrases;
    return opts;
}

int classify_error(const Error& e, std::ostream& err) {
    err << "error: " << e.what() << "\n";
    if (dynamic_cast<const PrivacyViolation*>(&e)) return kExitPrivacy;
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const BackendUnavailable*>(&e)) return kExitBackend;
    if (dynamic_cast<const MalformedRow*>(&e) || dynamic_cast<const UnknownChannel*>(&e) ||
        dynamic_cast<const UnknownLabel*>(&e) || dynamic_cast<const NonMonotonic*>(&e) ||
        dynamic_cast<const MissingFile*>(&e) || dynamic_cast<const LabelNotInTaskSpec*>(&e) ||
        dynamic_cast<const DuplicateSampleId*>(&e) || dynamic_cast<const ManifestError*>(&e) ||
        dynamic_cast<const TraceInvariantViolation*>(&e) || dynamic_cast<const EmptyTrace*>(&e) ||
        dynamic_cast<const EmptyRawWindow*>(&e)) {
        return kExitDataInvalid;
    }
    return kExitUsage;
}

std::string latency_line(const ReasoningResult& result) {
    char buf[160];
    double summarize = 0.0, reason = 0.0;
    if (auto it = result.stage_latency_ms.find("summarize"); it != result.stage_latency_ms.end()) {
        summarize = it->second;
    }
    if (auto it = result.stage_latency_ms.find("reason"); it != result.stage_latency_ms.end()) reason = it->second;
    std::snprintf(buf, sizeof(buf), "latency: summarize=%.1fms reason=%.1fms total=%.1fms overhead=%.1fms",
                  summarize, reason, result.total_latency_ms, result.overhead_ms);
    return buf;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
}

}  // namespace

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    int problems = 0;
    TaskSpec task;
    try {
        task = load_task_file(config.resolve(config.task_path));
        out << "task '" << task.task_id << "': ok (" << task.label_set.size() << " labels)\n";
    } catch (const Error& e) {
        err << "task: " << e.what() << "\n";
        return kExitDataInvalid;
    }
    try {
        const PromptTemplate tmpl = config.template_path.empty()
                                        ? template_from_task(task)
                                        : load_template_file(config.resolve(config.template_path));
        for (const auto& v : validate(tmpl, task)) {
            err << "template: " << v << "\n";
            ++problems;
        }
        if (problems == 0) out << "template '" << tmpl.version << "': ok\n";
    } catch (const Error& e) {
        err << "template: " << e.what() << "\n";
        ++problems;
    }

    DatasetManifest manifest;
    try {
        manifest = parse_manifest(config.resolve(config.manifest_path));
    } catch (const Error& e) {
        err << "manifest: " << e.what() << "\n";
        return kExitDataInvalid;
    }
    if (manifest.task_id != task.task_id) {
        err << "manifest: task_id '" << manifest.task_id << "' does not match task '" << task.task_id << "'\n";
        ++problems;
    }

    LoadOptions opts;
    opts.strict = config.strict;
    std::set<std::string> ids;
    std::set<std::string> labels(task.label_set.begin(), task.label_set.end());
    for (const auto& entry : manifest.samples) {
        std::vector<std::string> warnings;
        try {
            if (!ids.insert(entry.sample_id).second) {
                throw DuplicateSampleId("duplicate sample_id '" + entry.sample_id + "'");
            }
            if (!labels.count(entry.ground_truth)) {
                throw LabelNotInTaskSpec("ground_truth '" + entry.ground_truth + "' not in task label set");
            }
            const std::filesystem::path trace_path = manifest.base_dir / entry.trace_path;
            if (manifest.kind == TraceKind::Sensor) {
                const SensorTrace trace = load_sensor_csv(trace_path, manifest, opts, &warnings);
                out << entry.sample_id << ": ok (" << trace.size() << " readings)\n";
            } else {
                const PerceptionTrace trace = load_perception_jsonl(trace_path, manifest.vocabulary,
                                                                    manifest.utc_offset_minutes, opts, &warnings);
                out << entry.sample_id << ": ok (" << trace.size() << " events)\n";
            }
        } catch (const Error& e) {
            err << entry.sample_id << ": " << e.what() << "\n";
            ++problems;
        }
        print_warnings(warnings, err);
    }
    out << (problems == 0 ? "validation clean\n" : "validation found " + std::to_string(problems) + " problem(s)\n");
    return problems == 0 ? kExitOk : kExitDataInvalid;
}

int cmd_run(const RunConfig& config, const std::string& sample_id, bool show_prompt, std::ostream& out,
            std::ostream& err) {
    try {
        const LoadedExperiment exp = load_experiment(config);
        print_warnings(exp.warnings, err);
        const Sample* sample = nullptr;
        for (const auto& s : exp.samples) {
            if (s.sample_id == sample_id) sample = &s;
        }
        if (!sample) throw ConfigError("sample '" + sample_id + "' not found in manifest");

        const auto owned = build_backends(config);
        const ReasoningResult result = run_pipeline(*sample, exp.task, config.plan, config.mode,
                                                    backend_pointers(owned), config.policy,
                                                    pipeline_options(config, exp));

        out << "sample: " << sample->sample_id << "\n";
        out << "strategy: " << strategy_name(result.strategy_used.kind) << ", mode: " << mode_name(config.mode)
            << "\n";
        if (show_prompt) {
            out << "--- prompt ---\n" << result.final_prompt.text << "\n--- end prompt ---\n";
        }
        if (!result.intermediate_summaries.empty()) {
            out << "intermediate summaries: " << result.intermediate_summaries.size() << "\n";
        }
        for (const auto& [tn, score] : result.adaptive_scores) {
            out << "candidate tn=" << format_duration(tn) << " modal-label count=" << score << "\n";
        }
        std::vector<ParsedAnswer> answers;
        for (std::size_t i = 0; i < result.trials.size(); ++i) {
            const ParsedAnswer parsed =
                parse_answer(result.trials[i].response_text, exp.task.label_set, config.hedge_phrases);
            answers.push_back(parsed);
            out << "trial " << (i + 1) << ": " << parsed.display() << "\n";
        }
        SampleVerdict v = verdict(answers, sample->ground_truth);
        out << "majority: " << v.majority.display() << " (truth: " << sample->ground_truth << ")\n";
        out << "correct=" << (v.correct ? "yes" : "no") << " consistent=" << (v.consistent ? "yes" : "no")
            << " uncertain=" << (v.uncertain ? "yes" : "no") << "\n";
        out << latency_line(result) << "\n";
        for (const auto& [stage, name] : result.stage_backend) {
            out << "stage " << stage << " -> backend " << name << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        return classify_error(e, err);
    }
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const LoadedExperiment exp = load_experiment(config);
        print_warnings(exp.warnings, err);
        const auto owned = build_backends(config);
        const MetricsReport report =
            evaluate_samples(exp.samples, exp.task, config.plan, config.mode, backend_pointers(owned), config.policy,
                             pipeline_options(config, exp), exp.fingerprint, exp.summary);
        const std::filesystem::path out_dir = config.resolve(config.out_dir);
        write_report_files(report, out_dir, "report");
        out << report_to_text(report);
        out << "reports written to " << out_dir.string() << "/report.{json,csv,txt}\n";
        return kExitOk;
    } catch (const Error& e) {
        return classify_error(e, err);
    }
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const LoadedExperiment exp = load_experiment(config);
        print_warnings(exp.warnings, err);
        const auto owned = build_backends(config);
        const auto reports = compare_modes(exp.samples, exp.task, config.plan, backend_pointers(owned), config.policy,
                                           pipeline_options(config, exp), exp.fingerprint, exp.summary);
        const std::filesystem::path out_dir = config.resolve(config.out_dir);
        out << "mode        accuracy  consistency  uncertainty  mean total ms  mean summarize ms  mean reason ms\n";
        for (const auto& [mode, report] : reports) {
            write_report_files(report, out_dir, "report_" + std::string(mode_name(mode)));
            const auto mean_of = [&report](const char* stage) {
                const auto it = report.stage_latency.find(stage);
                return it == report.stage_latency.end() ? 0.0 : it->second.mean;
            };
            char line[160];
            std::snprintf(line, sizeof(line), "%-11s %-9.4f %-12.4f %-12.4f %-14.1f %-18.1f %-14.1f\n",
                          std::string(mode_name(mode)).c_str(), report.accuracy, report.consistency_rate,
                          report.uncertainty_rate, mean_of("total"), mean_of("summarize"), mean_of("reason"));
            out << line;
        }
        out << "reports written to " << out_dir.string() << "/report_<mode>.{json,csv,txt}\n";
        return kExitOk;
    } catch (const Error& e) {
        return classify_error(e, err);
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Long-horizon sensor trace reasoning pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string sample_id;
    std::string mode_override;
    std::string strategy_override;
    std::string out_dir_override;
    int trials_override = 0;
    bool show_prompt = false;
    bool strict = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config file")->required();
        cmd->add_option("--mode", mode_override, "override deployment mode (edge|cloud|edge_cloud)");
        cmd->add_option("--strategy", strategy_override,
                        "override strategy (direct|summarize_then_reason|selective_history|adaptive_history)");
        cmd->add_option("--trials", trials_override, "override trial count");
        cmd->add_option("--out-dir", out_dir_override, "override output directory");
        cmd->add_flag("--strict", strict, "fail on out-of-order input rows");
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "load and validate the dataset");
    add_common(validate_cmd);
    CLI::App* run_cmd = app.add_subcommand("run", "run one sample end-to-end");
    add_common(run_cmd);
    run_cmd->add_option("--sample", sample_id, "sample id")->required();
    run_cmd->add_flag("--show-prompt", show_prompt, "print the assembled prompt");
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate the full dataset and write reports");
    add_common(eval_cmd);
    CLI::App* compare_cmd = app.add_subcommand("compare", "evaluate under edge, cloud, and edge-cloud modes");
    add_common(compare_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << e.what() << "\n";
        return kExitUsage;
    }

    RunConfig config;
    try {
        config = load_run_config(config_path);
        if (!mode_override.empty()) config.mode = mode_from_name(mode_override);
        if (!strategy_override.empty()) {
            config.plan.kind = strategy_from_name(strategy_override);
            const bool needs_history = config.plan.kind == StrategyKind::SelectiveHistory ||
                                       config.plan.kind == StrategyKind::AdaptiveHistory;
            if (needs_history && !config.plan.history) {
                config.plan.history = HistoryConfig{};  // 30 minutes latest, 6 hours history
                err << "note: using default history windows t0=30m, tn=6h\n";
            }
            if (config.plan.kind == StrategyKind::AdaptiveHistory &&
                config.plan.history->candidate_histories.empty()) {
                config.plan.history->candidate_histories = {Seconds{3 * 3600}, Seconds{6 * 3600},
                                                            Seconds{12 * 3600}, Seconds{24 * 3600}};
                err << "note: using default candidate history lengths 3h/6h/12h/24h\n";
            }
        }
        if (trials_override > 0) config.trials = trials_override;
        if (!out_dir_override.empty()) config.out_dir = out_dir_override;
        if (strict) config.strict = true;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (validate_cmd->parsed()) return cmd_validate(config, out, err);
    if (run_cmd->parsed()) return cmd_run(config, sample_id, show_prompt, out, err);
    if (eval_cmd->parsed()) return cmd_eval(config, out, err);
    return cmd_compare(config, out, err);
}

}  // namespace sentrace
