#include "vand/tiling.hpp"

#include <algorithm>

namespace vand::tiling {

namespace {

int floor_div2(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// Start of a window of side `side` centred on [start, start + extent).
int centred_start(int start, int extent, int side) { return start + floor_div2(extent - side); }

}  // namespace

bool uses_strip_rule(const ForegroundComponent& c, const PipelineConfig& config) {
    const double w = c.bbox.w;
    const double h = c.bbox.h;
    const bool elongated = w > config.elongation_ratio * h || h > config.elongation_ratio * w;
    return elongated && c.part_count > config.part_count_threshold;
}

std::vector<TilePlan> plan_tiles(const ForegroundComponent& c, Dims image, const PipelineConfig& config) {
    const BBox& b = c.bbox;
    std::vector<TilePlan> plans;

    if (!uses_strip_rule(c, config)) {
        const int side = std::max(config.min_tile_side, std::max(b.w, b.h));
        BBox window{centred_start(b.x0, b.w, side), centred_start(b.y0, b.h, side), side, side};
        plans.push_back({clamp_window(window, image), c.id});
        return plans;
    }

    const bool horizontal = b.w >= b.h;
    const int long_start = horizontal ? b.x0 : b.y0;
    const int long_len = horizontal ? b.w : b.h;
    const int short_start = horizontal ? b.y0 : b.x0;
    const int short_len = horizontal ? b.h : b.w;

    const int side = std::max(config.min_tile_side, short_len);
    const int step = std::max(1, short_len / 2);
    const int cross = centred_start(short_start, short_len, side);

    // Window centre = start + side/2. First centre sits on the first pixel,
    // last centre on the last pixel.
    const int first = long_start - side / 2;
    const int last = long_start + long_len - (side + 1) / 2;

    auto emit = [&](int start) {
        BBox window = horizontal ? BBox{start, cross, side, side} : BBox{cross, start, side, side};
        TilePlan plan{clamp_window(window, image), c.id};
        if (plans.empty() || !(plans.back() == plan)) plans.push_back(plan);
    };

    int pos = first;
    emit(pos);
    while (pos < last) {
        pos = std::min(pos + step, last);
        emit(pos);
    }
    return plans;
}

Image extract_tile(const Image& image, const TilePlan& plan) {
    const BBox& w = plan.window;
    if (w.w < 1 || w.h < 1 || w.x0 < 0 || w.y0 < 0 || w.x1() > image.width() || w.y1() > image.height()) {
        throw ContractError("extract_tile: window outside image bounds");
    }
    Image tile(w.h, w.w);
    for (int y = 0; y < w.h; ++y) {
        for (int x = 0; x < w.w; ++x) tile(y, x) = image(w.y0 + y, w.x0 + x);
    }
    return tile;
}

}  // namespace vand::tiling
