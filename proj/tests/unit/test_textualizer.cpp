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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "sentrace/textualize.hpp"
#include "support/synthetic.hpp"

using namespace sentrace;
using sentrace::test::at;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::stringstream ss(text);
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

SensorTrace two_channel_trace() {
    std::vector<ChannelInfo> channels{{"co2", "ppm", "carbon dioxide concentration", 1},
                                      {"light", "lux", "ambient light level", 0}};
    std::vector<SensorReading> readings{
        {at(10, 0), "co2", 400.0, "ppm"},
        {at(10, 0), "light", 250.0, "lux"},
        {at(10, 5), "co2", 410.0, "ppm"},
        {at(10, 5), "light", 260.0, "lux"},
    };
    return SensorTrace(std::move(channels), std::move(readings));
}

}  // namespace

TEST_CASE("sensor block: one legend line plus one line per timestamp") {
    const DataBlock block = render_sensor_block(two_channel_trace(), {0});
    const auto lines = lines_of(block.text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "Channels: co2 = carbon dioxide concentration (ppm); light = ambient light level (lux)");
    CHECK(lines[1] == "10:00 — co2=400.0, light=250");
    CHECK(lines[2] == "10:05 — co2=410.0, light=260");
    CHECK(block.taint == Taint::Raw);
    CHECK(block.token_estimate == estimate_tokens(block.text));
}

TEST_CASE("sensor block: a channel missing at one timestamp is omitted from that line only") {
    std::vector<ChannelInfo> channels{{"co2", "ppm", "co2 level", 1}, {"light", "lux", "light level", 0}};
    std::vector<SensorReading> readings{
        {at(10, 0), "co2", 400.0, "ppm"},
        {at(10, 5), "co2", 410.0, "ppm"},
        {at(10, 5), "light", 260.0, "lux"},
    };
    const SensorTrace trace(std::move(channels), std::move(readings));
    const auto lines = lines_of(render_sensor_block(trace, {0}).text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[1] == "10:00 — co2=400.0");
    CHECK(lines[2] == "10:05 — co2=410.0, light=260");
}

TEST_CASE("rendering is deterministic") {
    const SensorTrace trace = two_channel_trace();
    CHECK(render_sensor_block(trace, {0}).text == render_sensor_block(trace, {0}).text);
    const PerceptionTrace events({"walking"}, {{at(8, 0), at(8, 30), "walking"}});
    CHECK(render_perception_block(events, {0}).text == render_perception_block(events, {0}).text);
}

TEST_CASE("empty traces cannot be rendered") {
    const SensorTrace trace({{"co2", "ppm", "x", 1}}, {});
    CHECK_THROWS_AS(render_sensor_block(trace, {0}), EmptyTrace);
    const PerceptionTrace events({"walking"}, {});
    CHECK_THROWS_AS(render_perception_block(events, {0}), EmptyTrace);
}

TEST_CASE("perception block groups events under day headers") {
    const PerceptionTrace trace({"sleeping", "eating"},
                                {{at(1, 0), at(7, 0), "sleeping"}, {at(7, 30), at(8, 0), "eating"}});
    const auto lines = lines_of(render_perception_block(trace, {0}).text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "Day 1 (2023-01-02):");
    CHECK(lines[1] == "01:00–07:00 sleeping");
    CHECK(lines[2] == "07:30–08:00 eating");
}

TEST_CASE("midnight-spanning events stay under their start day") {
    const PerceptionTrace trace({"sleeping"}, {{at(23, 30), at(7, 0, 1), "sleeping"}});
    const auto lines = lines_of(render_perception_block(trace, {0}).text);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "Day 1 (2023-01-02):");
    CHECK(lines[1] == "23:30–07:00 sleeping");
}

TEST_CASE("a 28-day trace renders 28 day headers") {
    const PerceptionTrace trace = test::generate_activity_trace(28, 11);
    const auto lines = lines_of(render_perception_block(trace, {0}).text);
    int headers = 0;
    for (const auto& line : lines) {
        if (line.rfind("Day ", 0) == 0) ++headers;
    }
    CHECK(headers == 28);
    CHECK(lines[0] == "Day 1 (2023-01-02):");
}

TEST_CASE("token estimate is ceil(bytes/4)") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("12345678") == 2);
    CHECK(estimate_tokens("123456789") == 3);
    CHECK(estimate_tokens("1") == 1);
}

TEST_CASE("a four-week half-hour trace blows the token budget cited for long traces") {
    const PerceptionTrace trace = test::generate_activity_trace(28, 11);
    const DataBlock block = render_perception_block(trace, {0});
    CHECK(block.token_estimate > 5000);
}

TEST_CASE("property: token estimate is subadditive up to one token") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> len(0, 50);
    for (int i = 0; i < 500; ++i) {
        const std::string a(len(rng), 'x');
        const std::string b(len(rng), 'y');
        CHECK(estimate_tokens(a + b) <= estimate_tokens(a) + estimate_tokens(b) + 1);
        CHECK(estimate_tokens(a + b) >= estimate_tokens(a));
    }
}

TEST_CASE("truncate returns blocks under budget unchanged") {
    const DataBlock block = render_sensor_block(two_channel_trace(), {0});
    const DataBlock same = truncate_to_budget(block, block.token_estimate);
    CHECK(same.text == block.text);
}

TEST_CASE("truncate keeps the newest lines and appends a marker") {
    std::vector<SensorReading> readings;
    for (int i = 0; i < 100; ++i) {
        readings.push_back({at(8, 0) + Seconds{i * 60}, "co2", 400.0 + i, "ppm"});
    }
    const SensorTrace trace({{"co2", "ppm", "carbon dioxide concentration", 1}}, std::move(readings));
    const DataBlock block = render_sensor_block(trace, {0});
    const int budget = block.token_estimate / 10;
    const DataBlock cut = truncate_to_budget(block, budget);

    CHECK(cut.token_estimate <= budget);
    CHECK(cut.taint == Taint::Raw);
    const auto original = lines_of(block.text);
    const auto kept = lines_of(cut.text);
    CHECK(kept.front() == original.front());  // legend retained
    CHECK(kept.back() == "[truncated: kept most recent portion]");
    // Retained data lines are a suffix of the original data lines.
    const std::vector<std::string> kept_data(kept.begin() + 1, kept.end() - 1);
    REQUIRE(!kept_data.empty());
    const std::size_t offset = original.size() - kept_data.size();
    for (std::size_t i = 0; i < kept_data.size(); ++i) {
        CHECK(kept_data[i] == original[offset + i]);
    }
    CHECK(kept_data.back() == original.back());  // newest line survives
}

TEST_CASE("truncate drops day headers whose events are gone") {
    const PerceptionTrace trace = test::generate_activity_trace(4, 5);
    const DataBlock block = render_perception_block(trace, {0});
    const DataBlock cut = truncate_to_budget(block, block.token_estimate / 3);
    const auto kept = lines_of(cut.text);
    // The first retained line must be a day header, and day 1 must be gone.
    CHECK(kept.front().rfind("Day ", 0) == 0);
    CHECK(kept.front() != "Day 1 (2023-01-02):");
    CHECK(cut.token_estimate <= block.token_estimate / 3);
}

TEST_CASE("a one-token budget is too small") {
    const DataBlock block = render_sensor_block(two_channel_trace(), {0});
    CHECK_THROWS_AS(truncate_to_budget(block, 1), BudgetTooSmall);
}

TEST_CASE("property: truncation preserves a suffix of data lines") {
    std::mt19937 rng(12);
    for (int round = 0; round < 50; ++round) {
        std::vector<SensorReading> readings;
        const int n = std::uniform_int_distribution<int>(3, 80)(rng);
        for (int i = 0; i < n; ++i) {
            readings.push_back({at(6, 0) + Seconds{i * 120}, "co2",
                                std::uniform_real_distribution<double>(300, 900)(rng), "ppm"});
        }
        const SensorTrace trace({{"co2", "ppm", "carbon dioxide concentration", 1}}, std::move(readings));
        const DataBlock block = render_sensor_block(trace, {0});
        const int budget = std::uniform_int_distribution<int>(1, block.token_estimate + 10)(rng);
        try {
            const DataBlock cut = truncate_to_budget(block, budget);
            CHECK(cut.token_estimate <= budget);
            const auto original = lines_of(block.text);
            auto kept = lines_of(cut.text);
            if (kept.back() == "[truncated: kept most recent portion]") kept.pop_back();
            REQUIRE(!kept.empty());
            CHECK(kept.front() == original.front());
            const std::size_t offset = original.size() - (kept.size() - 1);
            for (std::size_t i = 1; i < kept.size(); ++i) {
                CHECK(kept[i] == original[offset + i - 1]);
            }
        } catch (const BudgetTooSmall&) {
            // Acceptable for tiny budgets; verified precisely above.
        }
    }
}
