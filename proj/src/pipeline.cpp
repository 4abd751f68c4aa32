#include "vand/pipeline.hpp"

#include "vand/foreground.hpp"
#include "vand/tiling.hpp"

namespace vand::pipeline {

ClassPrompts prepare_class(const std::string& object_name, const prompts::PromptTemplates& templates,
                           backends::Embedder& embedder) {
    ClassPrompts out;
    out.ensemble = prompts::compose_ensemble(object_name, templates);

    std::vector<std::string> batch = out.ensemble.normal_prompts;
    batch.insert(batch.end(), out.ensemble.abnormal_prompts.begin(), out.ensemble.abnormal_prompts.end());
    auto embeddings = embedder.embed_text(batch);
    if (embeddings.size() != batch.size()) throw ContractError("embed_text returned the wrong number of embeddings");

    const auto n_normal = static_cast<std::ptrdiff_t>(out.ensemble.normal_prompts.size());
    out.normal.assign(embeddings.begin(), embeddings.begin() + n_normal);
    out.abnormal.assign(embeddings.begin() + n_normal, embeddings.end());
    return out;
}

SampleOutcome process_image(const std::string& sample_id, const Image& image, const ClassPrompts& prompts,
                            const backends::BackendSet& backends, const PipelineConfig& config) {
    if (image.height() < 1 || image.width() < 1) throw ContractError("sample '" + sample_id + "' has an empty image");
    const Dims dims = dims_of(image);
    SampleOutcome outcome;

    // Foreground extraction.
    const foreground::ProposalSet proposals = backends.proposer->propose_masks(image);
    const BinaryMask salient = backends.salient->salient_mask(image);
    if (!salient.same_shape(image)) throw ContractError("salient mask dimensions differ from image");
    outcome.proposal_count = static_cast<int>(proposals.size());
    outcome.kept_proposal_count =
        static_cast<int>(foreground::filter_proposals(proposals, salient, config.coverage_threshold).size());
    const auto components = foreground::extract_components(proposals, salient, config);

    // Tiling.
    std::vector<TilePlan> plans;
    for (const auto& c : components) {
        auto tiles = tiling::plan_tiles(c, dims, config);
        plans.insert(plans.end(), tiles.begin(), tiles.end());
        outcome.components.push_back({c.id, c.bbox, c.part_count, tiling::uses_strip_rule(c, config)});
    }

    // Tile- and pixel-level prediction.
    std::vector<std::pair<TilePlan, ScoreMap>> scaled;
    auto& result = outcome.result;
    result.sample_id = sample_id;
    for (const auto& plan : plans) {
        const Image tile = tiling::extract_tile(image, plan);
        const backends::Embedding emb = backends.embedder->embed_image(tile);
        scoring::TileScore ts = scoring::tile_score(emb, prompts.normal, prompts.abnormal, config.temperature);
        ts.tile = plan;
        const ScoreMap pixel_map =
            scoring::tile_pixel_map(tile, prompts.ensemble.localizing_prompts, *backends.segmenter, config);
        scaled.emplace_back(plan, aggregate::scale_tile_map(pixel_map, ts.score));
        result.tile_scores.push_back(ts);
    }

    // Aggregation.
    result.anomaly_map = aggregate::stitch(scaled, dims);
    std::vector<double> comp_scores;
    for (const auto& c : components) {
        const double s = aggregate::component_score(result.tile_scores, c.id);
        result.component_scores.emplace_back(c.id, s);
        comp_scores.push_back(s);
    }
    result.sample_score = aggregate::sample_score(comp_scores, config.top_fraction);
    return outcome;
}

namespace {

nlohmann::json bbox_json(const BBox& b) { return {{"x0", b.x0}, {"y0", b.y0}, {"w", b.w}, {"h", b.h}}; }

}  // namespace

nlohmann::json outcome_to_json(const SampleOutcome& o) {
    nlohmann::json doc;
    doc["sample_id"] = o.result.sample_id;
    doc["sample_score"] = o.result.sample_score;
    doc["proposals"] = o.proposal_count;
    doc["kept_proposals"] = o.kept_proposal_count;
    doc["components"] = nlohmann::json::array();
    for (const auto& c : o.components) {
        double score = 0.0;
        for (const auto& [id, s] : o.result.component_scores) {
            if (id == c.id) score = s;
        }
        doc["components"].push_back({{"id", c.id},
                                     {"bbox", bbox_json(c.bbox)},
                                     {"part_count", c.part_count},
                                     {"strip_tiled", c.strip_tiled},
                                     {"score", score}});
    }
    doc["tiles"] = nlohmann::json::array();
    for (const auto& t : o.result.tile_scores) {
        doc["tiles"].push_back({{"component_id", t.tile.component_id},
                                {"window", bbox_json(t.tile.window)},
                                {"score", t.score},
                                {"s_normal", t.s_normal},
                                {"s_abnormal", t.s_abnormal}});
    }
    return doc;
}

}  // namespace vand::pipeline
