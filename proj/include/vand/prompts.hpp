#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vand/core.hpp"

namespace vand::prompts {

inline constexpr std::string_view kObjectPlaceholder = "[o]";
inline constexpr std::string_view kClassPlaceholder = "[c]";

struct PromptTemplates {
    std::vector<std::string> normal_states;    // each contains "[o]" once
    std::vector<std::string> abnormal_states;  // each contains "[o]" once
    std::vector<std::string> text_templates;   // each contains "[c]" once
    std::vector<std::string> localizing_nouns;
    /// Applied to each localizing noun; "[c]" passes nouns through verbatim.
    std::string localizing_template = "[c]";

    bool operator==(const PromptTemplates&) const = default;
};

struct PromptEnsemble {
    std::string object_name;
    std::vector<std::string> normal_prompts;
    std::vector<std::string> abnormal_prompts;
    std::vector<std::string> localizing_prompts;

    bool operator==(const PromptEnsemble&) const = default;
};

/// Built-in lists: 12 normal states, 19 abnormal states, 19 localizing nouns
/// (one duplicate) and two sentence templates.
PromptTemplates default_templates();

/// Throws ConfigError naming the first template with a bad placeholder count.
void validate(const PromptTemplates& templates);

/// Template document (JSON):
///   {"mode": "extend"|"replace",           optional, default "extend"
///    "normal_states": [...], "abnormal_states": [...], "localizing": [...],
///    "text_templates": [...],               optional
///    "localizing_template": "..."}          optional
/// In extend mode every array is appended to the built-in lists; in replace
/// mode the document stands alone (text_templates falls back to the
/// built-ins when absent).
PromptTemplates templates_from_json(const nlohmann::json& doc);

/// Parses `text` as a template document. Errors carry line and column.
PromptTemplates parse_templates(std::string_view text);

PromptTemplates load_templates(const std::filesystem::path& path);

/// Serializes as a replace-mode document.
nlohmann::json templates_to_json(const PromptTemplates& templates);

/// Cross product of expanded states and sentence templates, de-duplicated in
/// first-occurrence order.
PromptEnsemble compose_ensemble(const std::string& object_name, const PromptTemplates& templates);

/// "pipe_fryum" -> "pipe fryum".
std::string object_name_for_class(const std::string& class_name);

}  // namespace vand::prompts
