#include "vand/config.hpp"

#include <fstream>

namespace vand {

nlohmann::json config_to_json(const PipelineConfig& c) {
    return {
        {"coverage_threshold", c.coverage_threshold},
        {"min_tile_side", c.min_tile_side},
        {"elongation_ratio", c.elongation_ratio},
        {"part_count_threshold", c.part_count_threshold},
        {"top_fraction", c.top_fraction},
        {"temperature", c.temperature},
        {"harmonic_epsilon", c.harmonic_epsilon},
        {"connectivity", c.connectivity},
        {"proposal_overlap_fraction", c.proposal_overlap_fraction},
        {"pixel_bins", c.pixel_bins},
        {"exact_pixel_metric", c.exact_pixel_metric},
    };
}

namespace {

template <typename T>
void read_field(const nlohmann::json& obj, const std::string& key, T& out) {
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field '" + key + "': " + e.what());
    }
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& doc) {
    const nlohmann::json& obj = (doc.is_object() && doc.contains("config")) ? doc.at("config") : doc;
    if (!obj.is_object()) throw ConfigError("config document must be a JSON object");

    PipelineConfig c;
    for (const auto& [key, value] : obj.items()) {
        if (key == "coverage_threshold") read_field(obj, key, c.coverage_threshold);
        else if (key == "min_tile_side") read_field(obj, key, c.min_tile_side);
        else if (key == "elongation_ratio") read_field(obj, key, c.elongation_ratio);
        else if (key == "part_count_threshold") read_field(obj, key, c.part_count_threshold);
        else if (key == "top_fraction") read_field(obj, key, c.top_fraction);
        else if (key == "temperature") read_field(obj, key, c.temperature);
        else if (key == "harmonic_epsilon") read_field(obj, key, c.harmonic_epsilon);
        else if (key == "connectivity") read_field(obj, key, c.connectivity);
        else if (key == "proposal_overlap_fraction") read_field(obj, key, c.proposal_overlap_fraction);
        else if (key == "pixel_bins") read_field(obj, key, c.pixel_bins);
        else if (key == "exact_pixel_metric") read_field(obj, key, c.exact_pixel_metric);
        else throw ConfigError("unknown config field '" + key + "'");
    }
    validate(c);
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

}  // namespace vand
