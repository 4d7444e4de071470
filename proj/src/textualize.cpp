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

#include "sentrace/textualize.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>
#include <vector>

namespace sentrace {

namespace {

constexpr std::string_view kLegendPrefix = "Channels: ";
constexpr std::string_view kTruncationMarker = "[truncated: kept most recent portion]";

std::string format_value(double value, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
    return buf;
}

bool is_day_header(const std::string& line) {
    // "Day N (YYYY-MM-DD):"
    if (line.size() < 19 || line.compare(0, 4, "Day ") != 0 || line.back() != ':') return false;
    std::size_t i = 4;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 4 || i + 14 != line.size()) return false;
    if (line[i] != ' ' || line[i + 1] != '(' || line[line.size() - 2] != ')') return false;
    const std::string date = line.substr(i + 2, 10);
    for (std::size_t k = 0; k < date.size(); ++k) {
        if (k == 4 || k == 7) {
            if (date[k] != '-') return false;
        } else if (!std::isdigit(static_cast<unsigned char>(date[k]))) {
            return false;
        }
    }
    return true;
}

bool is_header_line(const std::string& line) {
    return line.rfind(kLegendPrefix, 0) == 0 || is_day_header(line);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::stringstream ss(text);
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

}  // namespace

std::string_view taint_name(Taint t) {
    return t == Taint::Raw ? "raw" : "summary";
}

DataBlock make_block(std::string text, Taint taint, TimeWindow source_window) {
    DataBlock b;
    b.token_estimate = estimate_tokens(text);
    b.text = std::move(text);
    b.taint = taint;
    b.source_window = source_window;
    return b;
}

DataBlock render_sensor_block(const SensorTrace& trace, const RenderOptions& opts) {
    if (trace.empty()) throw EmptyTrace("cannot render an empty sensor trace");

    std::string text{kLegendPrefix};
    for (std::size_t i = 0; i < trace.channels().size(); ++i) {
        const ChannelInfo& ch = trace.channels()[i];
        if (i) text += "; ";
        text += ch.name + " = " + ch.meaning + " (" + ch.unit + ")";
    }

    const auto& readings = trace.readings();
    std::size_t i = 0;
    while (i < readings.size()) {
        const Timestamp t = readings[i].t;
        // Collect this timestamp's readings, then emit channels in declared order.
        std::map<std::string, double> row;
        while (i < readings.size() && readings[i].t == t) {
            row[readings[i].channel] = readings[i].value;
            ++i;
        }
        text += '\n' + format_time_of_day(t, opts.utc_offset_minutes) + " — ";
        bool first = true;
        for (const auto& ch : trace.channels()) {
            auto it = row.find(ch.name);
            if (it == row.end()) continue;
            if (!first) text += ", ";
            first = false;
            text += ch.name + "=" + format_value(it->second, ch.precision);
        }
    }
    return make_block(std::move(text), Taint::Raw, trace.span());
}

DataBlock render_perception_block(const PerceptionTrace& trace, const RenderOptions& opts) {
    if (trace.empty()) throw EmptyTrace("cannot render an empty perception trace");

    const auto day_of = [&](Timestamp t) {
        const std::int64_t shifted = t.epoch_seconds + static_cast<std::int64_t>(opts.utc_offset_minutes) * 60;
        return shifted >= 0 ? shifted / 86400 : (shifted - 86399) / 86400;
    };
    const std::int64_t first_day = day_of(trace.events().front().t_start);

    std::string text;
    std::int64_t current_day = -1;
    bool first_line = true;
    for (const auto& e : trace.events()) {
        const std::int64_t day = day_of(e.t_start);  // midnight-spanning events stay with their start day
        if (day != current_day) {
            current_day = day;
            char header[40];
            std::snprintf(header, sizeof(header), "Day %lld (%s):", static_cast<long long>(day - first_day + 1),
                          format_date(e.t_start, opts.utc_offset_minutes).c_str());
            if (!first_line) text += '\n';
            text += header;
            first_line = false;
        }
        text += '\n' + format_time_of_day(e.t_start, opts.utc_offset_minutes) + "–" +
                format_time_of_day(e.t_end, opts.utc_offset_minutes) + " " + e.label;
    }
    return make_block(std::move(text), Taint::Raw, trace.span());
}

int estimate_tokens(std::string_view text) {
    return static_cast<int>((text.size() + 3) / 4);
}

DataBlock truncate_to_budget(const DataBlock& block, int budget_tokens) {
    if (budget_tokens <= 0) throw Error("token budget must be positive");
    if (block.token_estimate <= budget_tokens) return block;

    const std::vector<std::string> lines = split_lines(block.text);
    std::vector<std::size_t> data_idx;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!is_header_line(lines[i])) data_idx.push_back(i);
    }

    // Rebuild with the oldest `drop` data lines removed; headers survive only
    // while they still own at least one retained data line.
    const auto rebuild = [&](std::size_t drop) {
        std::vector<std::string> kept;
        std::size_t dropped = 0;
        std::string pending_header;
        bool legend_seen = false;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (is_header_line(lines[i])) {
                if (!legend_seen && lines[i].rfind(kLegendPrefix, 0) == 0) {
                    kept.push_back(lines[i]);
                    legend_seen = true;
                } else {
                    pending_header = lines[i];
                }
                continue;
            }
            if (dropped < drop) {
                ++dropped;
                continue;
            }
            if (!pending_header.empty()) {
                kept.push_back(pending_header);
                pending_header.clear();
            }
            kept.push_back(lines[i]);
        }
        kept.push_back(std::string(kTruncationMarker));
        return join_lines(kept);
    };

    // Dropping more lines never grows the text, so the smallest viable drop
    // count can be found by bisection.
    std::size_t lo = 0, hi = data_idx.empty() ? 0 : data_idx.size() - 1;
    if (data_idx.empty() || estimate_tokens(rebuild(hi)) > budget_tokens) {
        throw BudgetTooSmall("budget of " + std::to_string(budget_tokens) +
                             " tokens cannot fit even the newest line");
    }
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (estimate_tokens(rebuild(mid)) <= budget_tokens) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    DataBlock out = make_block(rebuild(lo), block.taint, block.source_window);
    return out;
}

}  // namespace sentrace
