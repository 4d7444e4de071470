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

#include "sentrace/trace.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace sentrace {

SensorTrace::SensorTrace(std::vector<ChannelInfo> channels, std::vector<SensorReading> readings)
    : channels_(std::move(channels)), readings_(std::move(readings)) {
    std::unordered_set<std::string> declared;
    for (const auto& ch : channels_) {
        if (ch.name.empty()) throw TraceInvariantViolation("channel with empty name");
        if (!declared.insert(ch.name).second) {
            throw TraceInvariantViolation("duplicate channel declaration: " + ch.name);
        }
    }
    const SensorReading* prev = nullptr;
    for (const auto& r : readings_) {
        if (r.t.epoch_seconds < 0) throw TraceInvariantViolation("reading before epoch");
        if (r.channel.empty()) throw TraceInvariantViolation("reading with empty channel");
        if (!std::isfinite(r.value)) {
            throw TraceInvariantViolation("non-finite value on channel " + r.channel);
        }
        if (!declared.count(r.channel)) {
            throw TraceInvariantViolation("reading on undeclared channel: " + r.channel);
        }
        if (prev && (r.t < prev->t || (r.t == prev->t && r.channel < prev->channel))) {
            throw TraceInvariantViolation("readings not sorted by (t, channel)");
        }
        prev = &r;
    }
}

const ChannelInfo* SensorTrace::find_channel(const std::string& name) const {
    for (const auto& ch : channels_) {
        if (ch.name == name) return &ch;
    }
    return nullptr;
}

TimeWindow SensorTrace::span() const {
    if (readings_.empty()) return {};
    return {readings_.front().t, readings_.back().t + Seconds{1}};
}

PerceptionTrace::PerceptionTrace(std::vector<std::string> vocabulary, std::vector<PerceptionEvent> events)
    : vocabulary_(std::move(vocabulary)), events_(std::move(events)) {
    const std::unordered_set<std::string> vocab(vocabulary_.begin(), vocabulary_.end());
    const PerceptionEvent* prev = nullptr;
    for (const auto& e : events_) {
        if (e.t_start.epoch_seconds < 0) throw TraceInvariantViolation("event before epoch");
        if (e.t_start > e.t_end) throw TraceInvariantViolation("event with t_start > t_end");
        if (!vocab.count(e.label)) {
            throw TraceInvariantViolation("event label not in vocabulary: " + e.label);
        }
        if (prev && e.t_start < prev->t_start) {
            throw TraceInvariantViolation("events not sorted by t_start");
        }
        prev = &e;
    }
}

TimeWindow PerceptionTrace::span() const {
    if (events_.empty()) return {};
    // Smallest half-open window containing every event; instantaneous
    // events need one extra second to fall inside.
    Timestamp latest = events_.front().t_start;
    for (const auto& e : events_) {
        latest = std::max(latest, e.t_start == e.t_end ? e.t_end + Seconds{1} : e.t_end);
    }
    return {events_.front().t_start, latest};
}

std::vector<std::string> TaskSpec::validate() const {
    std::vector<std::string> violations;
    if (label_set.size() < 2) {
        violations.push_back("label_set must contain at least 2 labels");
    }
    std::set<std::string> seen;
    for (const auto& label : label_set) {
        if (!seen.insert(label).second) {
            violations.push_back("duplicate label '" + label + "'");
        }
        if (format_instruction.find(label) == std::string::npos) {
            violations.push_back("label '" + label + "' missing from format_instruction");
        }
    }
    return violations;
}

namespace {

void check_window_args(Timestamp start, Timestamp end) {
    if (start > end) {
        throw InvalidWindow("window start " + std::to_string(start.epoch_seconds) + " after end " +
                            std::to_string(end.epoch_seconds));
    }
}

}  // namespace

SensorTrace window(const SensorTrace& trace, Timestamp start, Timestamp end) {
    check_window_args(start, end);
    std::vector<SensorReading> kept;
    for (const auto& r : trace.readings()) {
        if (start <= r.t && r.t < end) kept.push_back(r);
    }
    return SensorTrace(trace.channels(), std::move(kept));
}

PerceptionTrace window(const PerceptionTrace& trace, Timestamp start, Timestamp end) {
    check_window_args(start, end);
    if (start == end) return PerceptionTrace(trace.vocabulary(), {});
    std::vector<PerceptionEvent> kept;
    for (const auto& e : trace.events()) {
        // Instantaneous events count when they fall inside the window;
        // extended events count on any overlap and are clipped to it.
        if (e.t_start == e.t_end) {
            if (start <= e.t_start && e.t_start < end) kept.push_back(e);
            continue;
        }
        if (e.t_start < end && e.t_end > start) {
            PerceptionEvent clipped = e;
            clipped.t_start = std::max(e.t_start, start);
            clipped.t_end = std::min(e.t_end, end);
            kept.push_back(std::move(clipped));
        }
    }
    return PerceptionTrace(trace.vocabulary(), std::move(kept));
}

Trace window(const Trace& trace, Timestamp start, Timestamp end) {
    if (std::holds_alternative<SensorTrace>(trace)) {
        return window(std::get<SensorTrace>(trace), start, end);
    }
    return window(std::get<PerceptionTrace>(trace), start, end);
}

double round_to_precision(double value, int precision) {
    double scale = 1.0;
    for (int i = 0; i < precision; ++i) scale *= 10.0;
    return std::round(value * scale) / scale;
}

SensorTrace downsample(const SensorTrace& trace, Seconds period, Reducer reducer) {
    if (period.count() <= 0) throw Error("downsample period must be positive");
    if (trace.empty()) throw EmptyTrace("cannot downsample an empty trace");

    const Timestamp origin = trace.readings().front().t;

    struct Bucket {
        double sum = 0.0;
        std::size_t count = 0;
        double first = 0.0;
        double last = 0.0;
        std::string unit;
    };
    // (bucket index, channel) -> accumulated values. Readings arrive sorted,
    // so "first"/"last" follow input order.
    std::map<std::pair<std::int64_t, std::string>, Bucket> buckets;
    for (const auto& r : trace.readings()) {
        const std::int64_t idx = (r.t - origin).count() / period.count();
        auto& b = buckets[{idx, r.channel}];
        if (b.count == 0) {
            b.first = r.value;
            b.unit = r.unit;
        }
        b.sum += r.value;
        b.last = r.value;
        ++b.count;
    }

    std::vector<SensorReading> out;
    out.reserve(buckets.size());
    for (const auto& [key, b] : buckets) {
        SensorReading r;
        r.t = origin + Seconds{key.first * period.count()};
        r.channel = key.second;
        r.unit = b.unit;
        switch (reducer) {
            case Reducer::Mean: {
                const ChannelInfo* ch = trace.find_channel(key.second);
                r.value = round_to_precision(b.sum / static_cast<double>(b.count), ch ? ch->precision : 1);
                break;
            }
            case Reducer::First: r.value = b.first; break;
            case Reducer::Last: r.value = b.last; break;
        }
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const SensorReading& a, const SensorReading& b) {
        return a.t != b.t ? a.t < b.t : a.channel < b.channel;
    });
    return SensorTrace(trace.channels(), std::move(out));
}

}  // namespace sentrace
