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

#include "sentrace/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace sentrace {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void warn(std::vector<std::string>* warnings, std::string message) {
    if (warnings) warnings->push_back(std::move(message));
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingFile("file not found: " + path.string());
    }
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open: " + path.string());
    return in;
}

}  // namespace

MalformedRow::MalformedRow(std::size_t line_no, const std::string& reason)
    : Error("line " + std::to_string(line_no) + ": " + reason), line_no_(line_no) {}

UnknownChannel::UnknownChannel(const std::string& name) : Error("unknown channel: " + name) {}

UnknownLabel::UnknownLabel(const std::string& label, std::size_t line_no)
    : Error("line " + std::to_string(line_no) + ": unknown label '" + label + "'") {}

SensorTrace load_sensor_csv(const std::filesystem::path& path, const DatasetManifest& manifest,
                            const LoadOptions& opts, std::vector<std::string>* warnings) {
    std::ifstream in = open_or_throw(path);

    std::string line;
    if (!std::getline(in, line)) {
        return SensorTrace(manifest.channels, {});
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty()) throw MalformedRow(1, "empty header");

    std::unordered_map<std::string, const ChannelInfo*> declared;
    for (const auto& ch : manifest.channels) declared[ch.name] = &ch;

    std::vector<const ChannelInfo*> columns;  // columns[i] describes header[i+1]
    for (std::size_t i = 1; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        auto it = declared.find(name);
        if (it == declared.end()) throw UnknownChannel(name);
        columns.push_back(it->second);
    }

    std::vector<SensorReading> readings;
    std::size_t line_no = 1;
    bool out_of_order = false;
    Timestamp prev{0};
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() > header.size()) {
            throw MalformedRow(line_no, "more cells than header columns");
        }
        Timestamp t;
        try {
            t = parse_timestamp(cells[0], manifest.utc_offset_minutes);
        } catch (const Error& e) {
            throw MalformedRow(line_no, e.what());
        }
        if (t < prev) out_of_order = true;
        prev = t;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const std::string cell = trim(cells[i]);
            if (cell.empty()) continue;  // reading absent at this timestamp
            double value = 0.0;
            const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc{} || p != cell.data() + cell.size()) {
                throw MalformedRow(line_no, "unparseable value '" + cell + "' in column " + columns[i - 1]->name);
            }
            if (!std::isfinite(value)) {
                throw MalformedRow(line_no, "non-finite value in column " + columns[i - 1]->name);
            }
            readings.push_back({t, columns[i - 1]->name, value, columns[i - 1]->unit});
        }
    }

    if (out_of_order) {
        if (opts.strict) throw NonMonotonic(path.string() + ": rows out of time order");
        warn(warnings, path.string() + ": rows out of time order, sorted on load");
    }
    std::stable_sort(readings.begin(), readings.end(), [](const SensorReading& a, const SensorReading& b) {
        return a.t != b.t ? a.t < b.t : a.channel < b.channel;
    });

    // Retransmitted (t, channel) duplicates: keep the last occurrence.
    std::vector<SensorReading> deduped;
    deduped.reserve(readings.size());
    for (const auto& r : readings) {
        if (!deduped.empty() && deduped.back().t == r.t && deduped.back().channel == r.channel) {
            warn(warnings, path.string() + ": duplicate reading for (" +
                               std::to_string(r.t.epoch_seconds) + ", " + r.channel + "), kept last");
            deduped.back() = r;
        } else {
            deduped.push_back(r);
        }
    }
    return SensorTrace(manifest.channels, std::move(deduped));
}

PerceptionTrace load_perception_jsonl(const std::filesystem::path& path, const std::vector<std::string>& vocabulary,
                                      int utc_offset_minutes, const LoadOptions& opts,
                                      std::vector<std::string>* warnings) {
    std::ifstream in = open_or_throw(path);
    const std::unordered_set<std::string> vocab(vocabulary.begin(), vocabulary.end());

    std::vector<PerceptionEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool out_of_order = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRow(line_no, std::string("bad JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("t_start") || !obj.contains("t_end") || !obj.contains("label")) {
            throw MalformedRow(line_no, "expected object with t_start, t_end, label");
        }
        PerceptionEvent e;
        try {
            const auto ts_of = [&](const json& v) {
                if (v.is_number_integer()) return Timestamp{v.get<std::int64_t>()};
                return parse_timestamp(v.get<std::string>(), utc_offset_minutes);
            };
            e.t_start = ts_of(obj["t_start"]);
            e.t_end = ts_of(obj["t_end"]);
        } catch (const json::exception& ex) {
            throw MalformedRow(line_no, std::string("bad timestamp field: ") + ex.what());
        } catch (const Error& ex) {
            throw MalformedRow(line_no, ex.what());
        }
        if (e.t_start > e.t_end) throw MalformedRow(line_no, "t_start after t_end");
        e.label = obj["label"].get<std::string>();
        if (!vocab.count(e.label)) throw UnknownLabel(e.label, line_no);
        if (!events.empty() && e.t_start < events.back().t_start) out_of_order = true;
        events.push_back(std::move(e));
    }
    if (out_of_order) {
        if (opts.strict) throw NonMonotonic(path.string() + ": events out of time order");
        warn(warnings, path.string() + ": events out of time order, sorted on load");
        std::stable_sort(events.begin(), events.end(),
                         [](const PerceptionEvent& a, const PerceptionEvent& b) { return a.t_start < b.t_start; });
    }
    return PerceptionTrace(vocabulary, std::move(events));
}

DatasetManifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in = open_or_throw(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ManifestError(path.string() + ": " + e.what());
    }

    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        m.task_id = doc.at("task_id").get<std::string>();
        m.utc_offset_minutes = doc.value("utc_offset_minutes", 0);
        const std::string kind = doc.value("trace_kind", "sensor");
        if (kind == "sensor") {
            m.kind = TraceKind::Sensor;
        } else if (kind == "perception") {
            m.kind = TraceKind::Perception;
        } else {
            throw ManifestError("unknown trace_kind '" + kind + "'");
        }
        for (const auto& ch : doc.value("channels", json::array())) {
            ChannelInfo info;
            info.name = ch.at("name").get<std::string>();
            info.unit = ch.value("unit", "");
            info.meaning = ch.value("meaning", "");
            info.precision = ch.value("precision", 1);
            m.channels.push_back(std::move(info));
        }
        for (const auto& label : doc.value("vocabulary", json::array())) {
            m.vocabulary.push_back(label.get<std::string>());
        }
        for (const auto& s : doc.at("samples")) {
            ManifestSample entry;
            entry.sample_id = s.at("sample_id").get<std::string>();
            entry.trace_path = s.at("trace").get<std::string>();
            entry.ground_truth = s.at("ground_truth").get<std::string>();
            const auto& ref = s.at("reference_time");
            entry.reference_time = ref.is_number_integer()
                                       ? Timestamp{ref.get<std::int64_t>()}
                                       : parse_timestamp(ref.get<std::string>(), m.utc_offset_minutes);
            const json metadata = s.value("subject_metadata", json::object());
            for (const auto& [key, value] : metadata.items()) {
                entry.subject_metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
            m.samples.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw ManifestError(path.string() + ": " + e.what());
    }
    if (m.kind == TraceKind::Sensor && m.channels.empty()) {
        throw ManifestError(path.string() + ": sensor dataset declares no channels");
    }
    if (m.kind == TraceKind::Perception && m.vocabulary.empty()) {
        throw ManifestError(path.string() + ": perception dataset declares no vocabulary");
    }
    return m;
}

std::pair<DatasetManifest, std::vector<Sample>> load_manifest(const std::filesystem::path& path, const TaskSpec& task,
                                                              const LoadOptions& opts,
                                                              std::vector<std::string>* warnings) {
    DatasetManifest manifest = parse_manifest(path);
    if (manifest.task_id != task.task_id) {
        throw ManifestError("manifest task_id '" + manifest.task_id + "' does not match task '" + task.task_id + "'");
    }
    const std::unordered_set<std::string> labels(task.label_set.begin(), task.label_set.end());

    std::vector<Sample> samples;
    std::unordered_set<std::string> seen_ids;
    for (const auto& entry : manifest.samples) {
        if (!seen_ids.insert(entry.sample_id).second) {
            throw DuplicateSampleId("duplicate sample_id '" + entry.sample_id + "'");
        }
        if (!labels.count(entry.ground_truth)) {
            throw LabelNotInTaskSpec("sample '" + entry.sample_id + "' ground_truth '" + entry.ground_truth +
                                     "' not in task label set");
        }
        const std::filesystem::path trace_path = manifest.base_dir / entry.trace_path;
        Sample sample;
        sample.sample_id = entry.sample_id;
        sample.ground_truth = entry.ground_truth;
        sample.reference_time = entry.reference_time;
        sample.subject_metadata = entry.subject_metadata;
        if (manifest.kind == TraceKind::Sensor) {
            sample.trace = load_sensor_csv(trace_path, manifest, opts, warnings);
        } else {
            sample.trace = load_perception_jsonl(trace_path, manifest.vocabulary, manifest.utc_offset_minutes, opts,
                                                 warnings);
        }
        Timestamp last{0};
        if (sample.is_sensor()) {
            if (!sample.sensor().empty()) last = sample.sensor().readings().back().t;
        } else {
            for (const auto& e : sample.perception().events()) last = std::max(last, e.t_end);
        }
        if (last > sample.reference_time) {
            throw ManifestError("sample '" + entry.sample_id + "' has trace data after its reference_time");
        }
        samples.push_back(std::move(sample));
    }
    return {std::move(manifest), std::move(samples)};
}

void write_sensor_csv(const std::filesystem::path& path, const SensorTrace& trace, int utc_offset_minutes) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write: " + path.string());
    out << "timestamp";
    for (const auto& ch : trace.channels()) out << ',' << ch.name;
    out << '\n';

    std::size_t i = 0;
    const auto& readings = trace.readings();
    while (i < readings.size()) {
        const Timestamp t = readings[i].t;
        std::map<std::string, double> row;
        while (i < readings.size() && readings[i].t == t) {
            row[readings[i].channel] = readings[i].value;
            ++i;
        }
        out << format_iso(t, utc_offset_minutes);
        for (const auto& ch : trace.channels()) {
            out << ',';
            auto it = row.find(ch.name);
            if (it != row.end()) {
                char buf[64];
                const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), it->second);
                out.write(buf, p - buf);
                (void)ec;
            }
        }
        out << '\n';
    }
}

}  // namespace sentrace
