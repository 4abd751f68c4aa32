#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vand/aggregate.hpp"
#include "vand/backends.hpp"
#include "vand/prompts.hpp"

namespace vand::pipeline {

/// Prompt ensemble of one class with its text embeddings.
struct ClassPrompts {
    prompts::PromptEnsemble ensemble;
    std::vector<backends::Embedding> normal;
    std::vector<backends::Embedding> abnormal;
};

/// Composes the ensemble and embeds normal and abnormal prompts in a single
/// embed_text call.
ClassPrompts prepare_class(const std::string& object_name, const prompts::PromptTemplates& templates,
                           backends::Embedder& embedder);

struct ComponentSummary {
    int id = 0;
    BBox bbox;
    int part_count = 0;
    bool strip_tiled = false;
};

struct SampleOutcome {
    aggregate::SampleResult result;
    std::vector<ComponentSummary> components;
    int proposal_count = 0;
    int kept_proposal_count = 0;
};

/// Foreground extraction, tiling, tile and pixel prediction, aggregation.
SampleOutcome process_image(const std::string& sample_id, const Image& image, const ClassPrompts& prompts,
                            const backends::BackendSet& backends, const PipelineConfig& config);

/// Per-sample detail record (components, tiles, scores) without the map.
nlohmann::json outcome_to_json(const SampleOutcome& outcome);

}  // namespace vand::pipeline
