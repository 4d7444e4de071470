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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sentrace/trace.hpp"

namespace sentrace {

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line_no, const std::string& reason);
    std::size_t line_no() const { return line_no_; }

private:
    std::size_t line_no_;
};

class UnknownChannel : public Error {
public:
    explicit UnknownChannel(const std::string& name);
};

class UnknownLabel : public Error {
public:
    UnknownLabel(const std::string& label, std::size_t line_no);
};

class NonMonotonic : public Error {
public:
    using Error::Error;
};

class MissingFile : public Error {
public:
    using Error::Error;
};

class LabelNotInTaskSpec : public Error {
public:
    using Error::Error;
};

class DuplicateSampleId : public Error {
public:
    using Error::Error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

enum class TraceKind { Sensor, Perception };

struct ManifestSample {
    std::string sample_id;
    std::string trace_path;  // relative to the manifest file
    std::string ground_truth;
    Timestamp reference_time;
    std::map<std::string, std::string> subject_metadata;
};

/// Binds a dataset on disk to a task: trace files, ground truths, channel
/// or vocabulary declarations, and the dataset's wall-clock offset.
struct DatasetManifest {
    std::string task_id;
    int utc_offset_minutes = 0;
    TraceKind kind = TraceKind::Sensor;
    std::vector<ChannelInfo> channels;      // sensor datasets
    std::vector<std::string> vocabulary;    // perception datasets
    std::vector<ManifestSample> samples;
    std::filesystem::path base_dir;
};

struct LoadOptions {
    bool strict = false;  // out-of-order rows become errors instead of a sorted load
};

SensorTrace load_sensor_csv(const std::filesystem::path& path, const DatasetManifest& manifest,
                            const LoadOptions& opts = {}, std::vector<std::string>* warnings = nullptr);

PerceptionTrace load_perception_jsonl(const std::filesystem::path& path, const std::vector<std::string>& vocabulary,
                                      int utc_offset_minutes, const LoadOptions& opts = {},
                                      std::vector<std::string>* warnings = nullptr);

DatasetManifest parse_manifest(const std::filesystem::path& path);

/// Loads the manifest plus every referenced trace, fully validated against
/// the task's label set.
std::pair<DatasetManifest, std::vector<Sample>> load_manifest(const std::filesystem::path& path, const TaskSpec& task,
                                                              const LoadOptions& opts = {},
                                                              std::vector<std::string>* warnings = nullptr);

/// Inverse of load_sensor_csv; load(write(load(x))) == load(x).
void write_sensor_csv(const std::filesystem::path& path, const SensorTrace& trace, int utc_offset_minutes);

}  // namespace sentrace
