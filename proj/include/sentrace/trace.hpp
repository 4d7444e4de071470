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

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sentrace/timebase.hpp"

namespace sentrace {

class InvalidWindow : public Error {
public:
    using Error::Error;
};

class EmptyTrace : public Error {
public:
    using Error::Error;
};

class TraceInvariantViolation : public Error {
public:
    using Error::Error;
};

struct ChannelInfo {
    std::string name;
    std::string unit;
    std::string meaning;
    int precision = 1;  // decimal places used when rendering and for mean downsampling
};

struct SensorReading {
    Timestamp t;
    std::string channel;
    double value = 0.0;
    std::string unit;
};

/// Timestamp-ordered multichannel readings. Immutable after construction;
/// the constructor validates every invariant (sorted by (t, channel),
/// finite values, channels declared).
class SensorTrace {
public:
    SensorTrace() = default;
    SensorTrace(std::vector<ChannelInfo> channels, std::vector<SensorReading> readings);

    const std::vector<ChannelInfo>& channels() const { return channels_; }
    const std::vector<SensorReading>& readings() const { return readings_; }
    const ChannelInfo* find_channel(const std::string& name) const;

    bool empty() const { return readings_.empty(); }
    std::size_t size() const { return readings_.size(); }

    /// Smallest half-open window containing every reading.
    TimeWindow span() const;

private:
    std::vector<ChannelInfo> channels_;
    std::vector<SensorReading> readings_;
};

struct PerceptionEvent {
    Timestamp t_start;
    Timestamp t_end;
    std::string label;
};

/// Activity-label events over a closed vocabulary, ordered by t_start.
class PerceptionTrace {
public:
    PerceptionTrace() = default;
    PerceptionTrace(std::vector<std::string> vocabulary, std::vector<PerceptionEvent> events);

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    const std::vector<PerceptionEvent>& events() const { return events_; }

    bool empty() const { return events_.empty(); }
    std::size_t size() const { return events_.size(); }

    TimeWindow span() const;

private:
    std::vector<std::string> vocabulary_;
    std::vector<PerceptionEvent> events_;
};

using Trace = std::variant<SensorTrace, PerceptionTrace>;

struct TaskSpec {
    std::string task_id;
    std::string objective;
    std::string context;
    std::string format_instruction;
    std::vector<std::string> label_set;
    std::vector<std::string> subject_metadata_fields;

    /// Empty iff the label-set and format-instruction invariants hold.
    std::vector<std::string> validate() const;
};

/// One evaluation unit: a trace bound to its ground-truth label and the
/// "now" used for windowing.
struct Sample {
    std::string sample_id;
    Trace trace;
    std::string ground_truth;
    Timestamp reference_time;
    std::map<std::string, std::string> subject_metadata;

    bool is_sensor() const { return std::holds_alternative<SensorTrace>(trace); }
    const SensorTrace& sensor() const { return std::get<SensorTrace>(trace); }
    const PerceptionTrace& perception() const { return std::get<PerceptionTrace>(trace); }
};

/// Readings with start <= t < end, ordering preserved.
SensorTrace window(const SensorTrace& trace, Timestamp start, Timestamp end);

/// Events overlapping [start, end), clipped to the window.
PerceptionTrace window(const PerceptionTrace& trace, Timestamp start, Timestamp end);

Trace window(const Trace& trace, Timestamp start, Timestamp end);

enum class Reducer { Mean, First, Last };

/// One reading per (channel, period bucket); buckets are aligned to the
/// first reading's timestamp and stamped with the bucket start. The mean
/// reducer rounds to the channel's configured precision.
SensorTrace downsample(const SensorTrace& trace, Seconds period, Reducer reducer);

double round_to_precision(double value, int precision);

}  // namespace sentrace
