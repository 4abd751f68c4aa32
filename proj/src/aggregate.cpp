#include "vand/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vand::aggregate {

ScoreMap scale_tile_map(const ScoreMap& pixel_map, double tile_score) {
    if (!(tile_score >= 0.0 && tile_score <= 1.0)) throw ContractError("scale_tile_map: tile score outside [0,1]");
    RealRaster out(pixel_map.height(), pixel_map.width());
    auto src = pixel_map.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * tile_score;
    return ScoreMap::checked(std::move(out));
}

ScoreMap stitch(std::span<const std::pair<TilePlan, ScoreMap>> scaled_maps, Dims image) {
    RealRaster sum(image.height, image.width, 0.0);
    Raster<int> count(image.height, image.width, 0);
    for (const auto& [plan, map] : scaled_maps) {
        const BBox& w = plan.window;
        if (map.height() != w.h || map.width() != w.w) throw ContractError("stitch: map does not match its window");
        if (w.x0 < 0 || w.y0 < 0 || w.x1() > image.width || w.y1() > image.height) {
            throw ContractError("stitch: window outside image");
        }
        for (int y = 0; y < w.h; ++y) {
            for (int x = 0; x < w.w; ++x) {
                sum(w.y0 + y, w.x0 + x) += map(y, x);
                count(w.y0 + y, w.x0 + x) += 1;
            }
        }
    }
    auto s = sum.values();
    auto c = count.values();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = c[i] > 0 ? s[i] / c[i] : 0.0;
    return normalize_map(sum);
}

double component_score(std::span<const scoring::TileScore> tile_scores, int component_id) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : tile_scores) {
        if (t.tile.component_id != component_id) continue;
        sum += t.score;
        ++n;
    }
    if (n == 0) throw ContractError("component_score: no tiles for component " + std::to_string(component_id));
    return sum / static_cast<double>(n);
}

std::size_t top_count(std::size_t n, double top_fraction) {
    if (n == 0) throw ContractError("sample_score: no component scores");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw ContractError("top_fraction must lie in (0,1]");
    // The slack absorbs products like 0.3 * 10 = 3.0000000000000004.
    const double exact = top_fraction * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

double sample_score(std::span<const double> component_scores, double top_fraction) {
    const std::size_t k = top_count(component_scores.size(), top_fraction);
    std::vector<double> sorted(component_scores.begin(), component_scores.end());
    std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
    return sum / static_cast<double>(k);
}

}  // namespace vand::aggregate
