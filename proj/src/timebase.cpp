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

#include "sentrace/timebase.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace sentrace {

namespace {

// Days <-> civil conversions valid for the proleptic Gregorian calendar.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t positive_mod(std::int64_t a, std::int64_t b) {
    std::int64_t r = a % b;
    return r < 0 ? r + b : r;
}

bool all_of_digits(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

int parse_int_field(std::string_view s, std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) {
            throw Error("bad timestamp: '" + std::string(s) + "'");
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

CivilTime civil_from_timestamp(Timestamp t, int utc_offset_minutes) {
    const std::int64_t shifted = t.epoch_seconds + static_cast<std::int64_t>(utc_offset_minutes) * 60;
    const std::int64_t days = floor_div(shifted, 86400);
    const std::int64_t sod = positive_mod(shifted, 86400);
    CivilTime c;
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(sod / 3600);
    c.minute = static_cast<int>((sod % 3600) / 60);
    c.second = static_cast<int>(sod % 60);
    return c;
}

Timestamp timestamp_from_civil(const CivilTime& c, int utc_offset_minutes) {
    const std::int64_t days = days_from_civil(c.year, c.month, c.day);
    const std::int64_t shifted = days * 86400 + c.hour * 3600 + c.minute * 60 + c.second;
    return Timestamp{shifted - static_cast<std::int64_t>(utc_offset_minutes) * 60};
}

std::string format_wallclock(Timestamp t, int utc_offset_minutes) {
    const CivilTime c = civil_from_timestamp(t, utc_offset_minutes);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", c.year, c.month, c.day, c.hour, c.minute);
    return buf;
}

std::string format_time_of_day(Timestamp t, int utc_offset_minutes) {
    const CivilTime c = civil_from_timestamp(t, utc_offset_minutes);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", c.hour, c.minute);
    return buf;
}

std::string format_date(Timestamp t, int utc_offset_minutes) {
    const CivilTime c = civil_from_timestamp(t, utc_offset_minutes);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

std::string format_iso(Timestamp t, int utc_offset_minutes) {
    const CivilTime c = civil_from_timestamp(t, utc_offset_minutes);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day, c.hour, c.minute,
                  c.second);
    return buf;
}

Timestamp parse_timestamp(std::string_view text, int utc_offset_minutes) {
    // Trim surrounding whitespace.
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw Error("empty timestamp");

    if (all_of_digits(text)) {
        const std::int64_t epoch = std::strtoll(std::string(text).c_str(), nullptr, 10);
        if (epoch < 0) throw Error("negative epoch timestamp: '" + std::string(text) + "'");
        return Timestamp{epoch};
    }

    // YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':') {
        throw Error("bad timestamp: '" + std::string(text) + "'");
    }
    CivilTime c;
    c.year = parse_int_field(text, 0, 4);
    c.month = parse_int_field(text, 5, 2);
    c.day = parse_int_field(text, 8, 2);
    c.hour = parse_int_field(text, 11, 2);
    c.minute = parse_int_field(text, 14, 2);
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        c.second = parse_int_field(text, pos + 1, 2);
        pos += 3;
    }
    bool has_zone = false;
    int zone_minutes = 0;
    if (pos < text.size()) {
        if (text[pos] == 'Z' && pos + 1 == text.size()) {
            has_zone = true;
        } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
            const int zh = parse_int_field(text, pos + 1, 2);
            const int zm = parse_int_field(text, pos + 4, 2);
            zone_minutes = (text[pos] == '-' ? -1 : 1) * (zh * 60 + zm);
            has_zone = true;
        } else {
            throw Error("bad timestamp: '" + std::string(text) + "'");
        }
    }
    if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour > 23 || c.minute > 59 || c.second > 60) {
        throw Error("bad timestamp: '" + std::string(text) + "'");
    }
    const int effective_offset = has_zone ? zone_minutes : utc_offset_minutes;
    const Timestamp t = timestamp_from_civil(c, effective_offset);
    // Reject nonexistent dates such as Feb 30 by round-tripping.
    const CivilTime back = civil_from_timestamp(t, effective_offset);
    if (back.year != c.year || back.month != c.month || back.day != c.day) {
        throw Error("bad calendar date: '" + std::string(text) + "'");
    }
    if (t.epoch_seconds < 0) throw Error("timestamp before epoch: '" + std::string(text) + "'");
    return t;
}

Seconds parse_duration(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw Error("empty duration");
    std::int64_t mult = 1;
    const char suffix = text.back();
    if (!std::isdigit(static_cast<unsigned char>(suffix))) {
        switch (suffix) {
            case 's': mult = 1; break;
            case 'm': mult = 60; break;
            case 'h': mult = 3600; break;
            case 'd': mult = 86400; break;
            default: throw Error("bad duration: '" + std::string(text) + "'");
        }
        text.remove_suffix(1);
    }
    if (!all_of_digits(text)) throw Error("bad duration: '" + std::string(text) + "'");
    const std::int64_t n = std::strtoll(std::string(text).c_str(), nullptr, 10);
    if (n < 0) throw Error("negative duration");
    return Seconds{n * mult};
}

std::string format_duration(Seconds d) {
    const std::int64_t s = d.count();
    if (s % 86400 == 0 && s != 0) return std::to_string(s / 86400) + "d";
    if (s % 3600 == 0 && s != 0) return std::to_string(s / 3600) + "h";
    if (s % 60 == 0 && s != 0) return std::to_string(s / 60) + "m";
    return std::to_string(s) + "s";
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char ch : data) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace sentrace
