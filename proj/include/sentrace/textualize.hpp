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

#include <string>
#include <string_view>

#include "sentrace/trace.hpp"

namespace sentrace {

class BudgetTooSmall : public Error {
public:
    using Error::Error;
};

/// Raw text came straight out of trace readings/events; Summary text came
/// out of a model response. The edge-cloud privacy contract keys on this.
enum class Taint { Raw, Summary };

std::string_view taint_name(Taint t);

struct DataBlock {
    std::string text;
    Taint taint = Taint::Raw;
    TimeWindow source_window;
    int token_estimate = 0;
};

/// Keeps the token_estimate invariant in one place.
DataBlock make_block(std::string text, Taint taint, TimeWindow source_window);

struct RenderOptions {
    int utc_offset_minutes = 0;
};

/// Legend line naming each declared channel, then one line per timestamp
/// with the present channels in declared order. Always Raw.
DataBlock render_sensor_block(const SensorTrace& trace, const RenderOptions& opts);

/// Events grouped by calendar day under "Day N (YYYY-MM-DD):" headers, one
/// "HH:MM–HH:MM label" line per event. Always Raw.
DataBlock render_perception_block(const PerceptionTrace& trace, const RenderOptions& opts);

/// ceil(bytes / 4); a model-agnostic budget guard, not a tokenizer.
int estimate_tokens(std::string_view text);

/// Drops whole oldest data lines (keeping the legend and the day headers of
/// retained days) until the block fits, then appends a truncation marker.
DataBlock truncate_to_budget(const DataBlock& block, int budget_tokens);

}  // namespace sentrace
