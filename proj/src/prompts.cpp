#include "vand/prompts.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace vand::prompts {

PromptTemplates default_templates() {
    PromptTemplates t;
    t.normal_states = {
        "good [o]",
        "normal [o]",
        "amazing [o]",
        "pristine [o]",
        "undamaged [o]",
        "[o] in good condition",
        "unbroken [o]",
        "[o] without any imperfections",
        "[o] without any scratches",
        "[o] without any marks",
        "complete [o]",
        "new [o]",
    };
    t.abnormal_states = {
        "broken [o]",
        "bad [o]",
        "flawed [o]",
        "defective [o]",
        "[o] in poor condition",
        "worn [o]",
        "[o] with scratches",
        "[o] with marks",
        "[o] with imperfections",
        "cracked [o]",
        "faulty [o]",
        "incomplete [o]",
        "bent [o]",
        "snapped [o]",
        "scratched [o]",
        "shattered [o]",
        "fractured [o]",
        "burst [o]",
        "[o] in pieces",
    };
    t.localizing_nouns = {
        "a tear",
        "a rip",
        "some damage",
        "a fault",
        "a break",
        "an abnormality",
        "a defect",
        "a crack",
        "an anomaly",
        "a missing component",
        "an error",
        "a mark",
        "a cut",
        "a dent",
        "a scratch",
        "an imperfection",
        "a blemish",
        "a mistake",
        "an error",
    };
    t.text_templates = {
        "a photo of a [c].",
        "a cropped photo of a [c].",
    };
    return t;
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

void require_placeholder(const std::vector<std::string>& list, const char* field, std::string_view placeholder) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (count_occurrences(list[i], placeholder) != 1) {
            std::ostringstream msg;
            msg << field << "[" << i << "] (\"" << list[i] << "\") must contain exactly one " << placeholder;
            throw ConfigError(msg.str());
        }
    }
}

std::string replace_once(std::string text, std::string_view placeholder, std::string_view value) {
    const auto pos = text.find(placeholder);
    if (pos == std::string::npos) throw ContractError("template '" + text + "' lacks " + std::string(placeholder));
    text.replace(pos, placeholder.size(), value);
    return text;
}

void push_unique(std::vector<std::string>& out, std::unordered_set<std::string>& seen, std::string value) {
    if (seen.insert(value).second) out.push_back(std::move(value));
}

std::vector<std::string> string_array(const nlohmann::json& doc, const char* field, bool required) {
    if (!doc.contains(field)) {
        if (required) throw ConfigError(std::string("template document: missing array '") + field + "'");
        return {};
    }
    const auto& arr = doc.at(field);
    if (!arr.is_array()) throw ConfigError(std::string("template document: '") + field + "' must be an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_string()) {
            throw ConfigError(std::string("template document: ") + field + "[" + std::to_string(i) + "] must be a string");
        }
        out.push_back(arr[i].get<std::string>());
    }
    return out;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

void validate(const PromptTemplates& t) {
    require_placeholder(t.normal_states, "normal_states", kObjectPlaceholder);
    require_placeholder(t.abnormal_states, "abnormal_states", kObjectPlaceholder);
    require_placeholder(t.text_templates, "text_templates", kClassPlaceholder);
    if (t.normal_states.empty()) throw ConfigError("normal_states must not be empty");
    if (t.abnormal_states.empty()) throw ConfigError("abnormal_states must not be empty");
    if (t.text_templates.empty()) throw ConfigError("text_templates must not be empty");
    if (t.localizing_nouns.empty()) throw ConfigError("localizing must not be empty");
    for (std::size_t i = 0; i < t.localizing_nouns.size(); ++i) {
        if (t.localizing_nouns[i].find(kObjectPlaceholder) != std::string::npos ||
            t.localizing_nouns[i].find(kClassPlaceholder) != std::string::npos) {
            throw ConfigError("localizing[" + std::to_string(i) + "] must not contain a placeholder");
        }
    }
    if (count_occurrences(t.localizing_template, kClassPlaceholder) != 1) {
        throw ConfigError("localizing_template must contain exactly one [c]");
    }
}

PromptTemplates templates_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("template document must be a JSON object");
    static const std::unordered_set<std::string> known{"mode", "normal_states", "abnormal_states", "localizing",
                                                       "text_templates", "localizing_template"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw ConfigError("template document: unknown field '" + key + "'");
    }
    std::string mode = "extend";
    if (doc.contains("mode")) {
        if (!doc.at("mode").is_string()) throw ConfigError("template document: 'mode' must be a string");
        mode = doc.at("mode").get<std::string>();
        if (mode != "extend" && mode != "replace") {
            throw ConfigError("template document: 'mode' must be \"extend\" or \"replace\", got \"" + mode + "\"");
        }
    }

    const auto normal = string_array(doc, "normal_states", true);
    const auto abnormal = string_array(doc, "abnormal_states", true);
    const auto localizing = string_array(doc, "localizing", true);
    const auto text = string_array(doc, "text_templates", false);

    PromptTemplates t = default_templates();
    if (mode == "replace") {
        t.normal_states = normal;
        t.abnormal_states = abnormal;
        t.localizing_nouns = localizing;
        if (doc.contains("text_templates")) t.text_templates = text;
    } else {
        append(t.normal_states, normal);
        append(t.abnormal_states, abnormal);
        append(t.localizing_nouns, localizing);
        append(t.text_templates, text);
    }
    if (doc.contains("localizing_template")) {
        if (!doc.at("localizing_template").is_string()) {
            throw ConfigError("template document: 'localizing_template' must be a string");
        }
        t.localizing_template = doc.at("localizing_template").get<std::string>();
    }
    validate(t);
    return t;
}

PromptTemplates parse_templates(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into line/column.
        std::size_t line = 1, col = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "template document: syntax error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    return templates_from_json(doc);
}

PromptTemplates load_templates(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open template document " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_templates(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

nlohmann::json templates_to_json(const PromptTemplates& t) {
    return {
        {"mode", "replace"},
        {"normal_states", t.normal_states},
        {"abnormal_states", t.abnormal_states},
        {"localizing", t.localizing_nouns},
        {"text_templates", t.text_templates},
        {"localizing_template", t.localizing_template},
    };
}

PromptEnsemble compose_ensemble(const std::string& object_name, const PromptTemplates& t) {
    if (object_name.empty()) throw ContractError("compose_ensemble: object name must not be empty");
    validate(t);

    PromptEnsemble e;
    e.object_name = object_name;
    auto expand = [&](const std::vector<std::string>& states, std::vector<std::string>& out) {
        std::unordered_set<std::string> seen;
        for (const auto& state : states) {
            const std::string expanded = replace_once(state, kObjectPlaceholder, object_name);
            for (const auto& sentence : t.text_templates) {
                push_unique(out, seen, replace_once(sentence, kClassPlaceholder, expanded));
            }
        }
    };
    expand(t.normal_states, e.normal_prompts);
    expand(t.abnormal_states, e.abnormal_prompts);

    std::unordered_set<std::string> seen;
    for (const auto& noun : t.localizing_nouns) {
        push_unique(e.localizing_prompts, seen, replace_once(t.localizing_template, kClassPlaceholder, noun));
    }
    return e;
}

std::string object_name_for_class(const std::string& class_name) {
    std::string out = class_name;
    for (char& ch : out) {
        if (ch == '_') ch = ' ';
    }
    return out;
}

}  // namespace vand::prompts
