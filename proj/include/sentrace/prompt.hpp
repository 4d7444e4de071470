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
#include <vector>

#include "sentrace/textualize.hpp"
#include "sentrace/trace.hpp"

namespace sentrace {

class MissingPlaceholder : public Error {
public:
    explicit MissingPlaceholder(const std::string& key);
};

class EmptySection : public Error {
public:
    explicit EmptySection(const std::string& section);
};

/// The four prompt sections. The data slot always sits between context and
/// format_instruction; data_slot_marker is a reserved token that must not
/// appear in any section text.
struct PromptTemplate {
    std::string objective;
    std::string context;  // may contain {subject_metadata.<key>} placeholders
    std::string format_instruction;
    std::string version = "v1";
    std::string data_slot_marker = "{data}";
};

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct SectionSpans {
    ByteSpan objective;
    ByteSpan context;
    ByteSpan data;
    ByteSpan format;
};

struct AssembledPrompt {
    std::string text;
    SectionSpans spans;
    std::vector<DataBlock> blocks;
    int token_estimate = 0;
};

/// A block plus the one-line caption that introduces it in the data section.
struct PromptBlock {
    DataBlock block;
    std::string caption;
};

/// "Data from YYYY-MM-DD HH:MM to YYYY-MM-DD HH:MM:"
std::string window_caption(const TimeWindow& window, int utc_offset_minutes);

AssembledPrompt assemble(const PromptTemplate& tmpl, const TaskSpec& task,
                         const std::map<std::string, std::string>& subject_metadata,
                         const std::vector<PromptBlock>& blocks);

/// Convenience: standard window captions derived from each block.
AssembledPrompt assemble(const PromptTemplate& tmpl, const TaskSpec& task,
                         const std::map<std::string, std::string>& subject_metadata,
                         const std::vector<DataBlock>& blocks, int utc_offset_minutes);

/// Empty iff the template invariants hold for this task; each violation
/// names the section and rule.
std::vector<std::string> validate(const PromptTemplate& tmpl, const TaskSpec& task);

/// The task's own prose as a template (version "task-default").
PromptTemplate template_from_task(const TaskSpec& task);

/// JSON file with fields objective, context, format_instruction, version.
PromptTemplate load_template_file(const std::filesystem::path& path);

}  // namespace sentrace
