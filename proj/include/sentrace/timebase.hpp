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

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sentrace {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Seconds = std::chrono::seconds;

/// A point in time, stored as whole seconds since the Unix epoch (UTC).
/// Wall-clock rendering applies a per-dataset fixed UTC offset.
struct Timestamp {
    std::int64_t epoch_seconds = 0;

    auto operator<=>(const Timestamp&) const = default;

    Timestamp operator+(Seconds d) const { return {epoch_seconds + d.count()}; }
    Timestamp operator-(Seconds d) const { return {epoch_seconds - d.count()}; }
    Seconds operator-(Timestamp other) const { return Seconds{epoch_seconds - other.epoch_seconds}; }
};

/// Half-open interval [start, end). Adjacent windows partition time with no
/// double counting.
struct TimeWindow {
    Timestamp start;
    Timestamp end;

    auto operator<=>(const TimeWindow&) const = default;

    Seconds duration() const { return end - start; }
    bool contains(Timestamp t) const { return start <= t && t < end; }
    bool empty() const { return start >= end; }
};

struct CivilTime {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

CivilTime civil_from_timestamp(Timestamp t, int utc_offset_minutes);
Timestamp timestamp_from_civil(const CivilTime& c, int utc_offset_minutes);

/// "YYYY-MM-DD HH:MM" in the dataset's wall clock.
std::string format_wallclock(Timestamp t, int utc_offset_minutes);
/// "HH:MM"
std::string format_time_of_day(Timestamp t, int utc_offset_minutes);
/// "YYYY-MM-DD"
std::string format_date(Timestamp t, int utc_offset_minutes);
/// "YYYY-MM-DDTHH:MM:SS" (used for CSV export; round-trips through parsing).
std::string format_iso(Timestamp t, int utc_offset_minutes);

/// Accepts ISO-8601 ("2023-01-02T10:00", "2023-01-02 10:00:30", optional
/// "Z" or "+HH:MM" zone designator) and bare epoch-second integers. Naive
/// timestamps are interpreted in the dataset's UTC offset so that parsing
/// and rendering round-trip.
Timestamp parse_timestamp(std::string_view text, int utc_offset_minutes);

/// Duration literals used in config files: "45s", "30m", "6h", "7d", or a
/// bare integer meaning seconds.
Seconds parse_duration(std::string_view text);
std::string format_duration(Seconds d);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace sentrace
