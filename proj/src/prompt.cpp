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

#include "sentrace/prompt.hpp"

#include <cctype>
#include <fstream>

#include "json.hpp"

namespace sentrace {

namespace {

constexpr std::string_view kPlaceholderPrefix = "{subject_metadata.";

std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string substitute_placeholders(const std::string& text, const std::map<std::string, std::string>& metadata) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t hit = text.find(kPlaceholderPrefix, pos);
        if (hit == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, hit - pos);
        const std::size_t key_begin = hit + kPlaceholderPrefix.size();
        const std::size_t close = text.find('}', key_begin);
        if (close == std::string::npos) {
            throw Error("unterminated placeholder in template near byte " + std::to_string(hit));
        }
        const std::string key = text.substr(key_begin, close - key_begin);
        auto it = metadata.find(key);
        if (it == metadata.end()) throw MissingPlaceholder(key);
        out += it->second;
        pos = close + 1;
    }
    return out;
}

}  // namespace

MissingPlaceholder::MissingPlaceholder(const std::string& key)
    : Error("no subject_metadata value for placeholder '" + key + "'") {}

EmptySection::EmptySection(const std::string& section) : Error("section '" + section + "' is empty") {}

std::string window_caption(const TimeWindow& window, int utc_offset_minutes) {
    return "Data from " + format_wallclock(window.start, utc_offset_minutes) + " to " +
           format_wallclock(window.end, utc_offset_minutes) + ":";
}

AssembledPrompt assemble(const PromptTemplate& tmpl, const TaskSpec& task,
                         const std::map<std::string, std::string>& subject_metadata,
                         const std::vector<PromptBlock>& blocks) {
    if (blocks.empty()) throw EmptySection("data");

    const std::string objective = trim_copy(substitute_placeholders(tmpl.objective, subject_metadata));
    const std::string context = trim_copy(substitute_placeholders(tmpl.context, subject_metadata));
    const std::string format = trim_copy(substitute_placeholders(tmpl.format_instruction, subject_metadata));
    if (objective.empty()) throw EmptySection("objective");
    if (context.empty()) throw EmptySection("context");
    if (format.empty()) throw EmptySection("format");
    (void)task;

    std::string data;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) data += "\n\n";
        data += blocks[i].caption + "\n" + blocks[i].block.text;
    }

    AssembledPrompt prompt;
    prompt.text.reserve(objective.size() + context.size() + data.size() + format.size() + 6);

    const auto append_section = [&prompt](const std::string& body) {
        if (!prompt.text.empty()) prompt.text += "\n\n";
        const std::size_t begin = prompt.text.size();
        prompt.text += body;
        return ByteSpan{begin, prompt.text.size()};
    };
    prompt.spans.objective = append_section(objective);
    prompt.spans.context = append_section(context);
    prompt.spans.data = append_section(data);
    prompt.spans.format = append_section(format);

    for (const auto& pb : blocks) prompt.blocks.push_back(pb.block);
    prompt.token_estimate = estimate_tokens(prompt.text);
    return prompt;
}

AssembledPrompt assemble(const PromptTemplate& tmpl, const TaskSpec& task,
                         const std::map<std::string, std::string>& subject_metadata,
                         const std::vector<DataBlock>& blocks, int utc_offset_minutes) {
    std::vector<PromptBlock> wrapped;
    wrapped.reserve(blocks.size());
    for (const auto& b : blocks) {
        wrapped.push_back({b, window_caption(b.source_window, utc_offset_minutes)});
    }
    return assemble(tmpl, task, subject_metadata, wrapped);
}

std::vector<std::string> validate(const PromptTemplate& tmpl, const TaskSpec& task) {
    std::vector<std::string> violations;
    const auto check_section = [&](const std::string& name, const std::string& body) {
        if (trim_copy(body).empty()) violations.push_back(name + " empty");
        if (!tmpl.data_slot_marker.empty() && body.find(tmpl.data_slot_marker) != std::string::npos) {
            violations.push_back(name + " contains reserved data slot marker '" + tmpl.data_slot_marker + "'");
        }
    };
    check_section("Objective", tmpl.objective);
    check_section("Context", tmpl.context);
    check_section("Format", tmpl.format_instruction);
    for (const auto& label : task.label_set) {
        if (tmpl.format_instruction.find(label) == std::string::npos) {
            violations.push_back("label '" + label + "' missing from Format");
        }
    }
    return violations;
}

PromptTemplate template_from_task(const TaskSpec& task) {
    PromptTemplate tmpl;
    tmpl.objective = task.objective;
    tmpl.context = task.context;
    tmpl.format_instruction = task.format_instruction;
    tmpl.version = "task-default";
    return tmpl;
}

PromptTemplate load_template_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open template file: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    PromptTemplate tmpl;
    try {
        tmpl.objective = doc.at("objective").get<std::string>();
        tmpl.context = doc.at("context").get<std::string>();
        tmpl.format_instruction = doc.at("format_instruction").get<std::string>();
        tmpl.version = doc.value("version", "v1");
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    return tmpl;
}

}  // namespace sentrace
