#include "vand/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vand {

std::size_t popcount(const BinaryMask& mask) {
    return static_cast<std::size_t>(
        std::count_if(mask.values().begin(), mask.values().end(), [](std::uint8_t v) { return v != 0; }));
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw ContractError("intersection_count: mask dimensions differ");
    auto av = a.values();
    auto bv = b.values();
    std::size_t n = 0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] && bv[i]) ++n;
    }
    return n;
}

RealRaster to_gray(const Image& image) {
    RealRaster gray(image.height(), image.width());
    auto src = image.values();
    auto dst = gray.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = (static_cast<double>(src[i].r) + src[i].g + src[i].b) / 3.0;
    }
    return gray;
}

ScoreMap::ScoreMap(int height, int width, double fill) : values_(height, width, fill) {
    if (!std::isfinite(fill) || fill < 0.0 || fill > 1.0) {
        throw ContractError("ScoreMap fill value outside [0,1]");
    }
}

ScoreMap ScoreMap::checked(RealRaster values) {
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            const double v = values(y, x);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                std::ostringstream msg;
                msg << "score map value " << v << " at (" << y << ", " << x << ") outside [0,1]";
                throw ContractError(msg.str());
            }
        }
    }
    return ScoreMap(std::move(values));
}

ScoreMap normalize_map(const RealRaster& values) {
    RealRaster out(values.height(), values.width());
    for (int y = 0; y < values.height(); ++y) {
        for (int x = 0; x < values.width(); ++x) {
            const double v = values(y, x);
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "non-finite score at (" << y << ", " << x << ")";
                throw ContractError(msg.str());
            }
            out(y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
    return ScoreMap::checked(std::move(out));
}

namespace {

void clamp_axis(int& start, int& extent, int limit) {
    if (extent >= limit) {
        start = 0;
        extent = limit;
        return;
    }
    start = std::clamp(start, 0, limit - extent);
}

}  // namespace

BBox clamp_window(const BBox& window, Dims image) {
    BBox out = window;
    clamp_axis(out.x0, out.w, image.width);
    clamp_axis(out.y0, out.h, image.height);
    return out;
}

std::string to_string(Label label) {
    switch (label) {
        case Label::normal: return "normal";
        case Label::anomalous: return "anomalous";
        case Label::unknown: return "unknown";
    }
    return "unknown";
}

Label label_from_string(const std::string& text) {
    if (text == "normal") return Label::normal;
    if (text == "anomalous") return Label::anomalous;
    if (text == "unknown") return Label::unknown;
    throw ContractError("unknown label '" + text + "'");
}

void validate(const ImageSample& sample) {
    if (sample.pixels.height() < 1 || sample.pixels.width() < 1) {
        throw ContractError("sample '" + sample.id + "' has an empty image");
    }
    if (sample.gt_mask && !sample.gt_mask->same_shape(sample.pixels)) {
        throw ContractError("sample '" + sample.id + "' mask dimensions differ from image");
    }
}

namespace {

void require_fraction(double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) {
        throw ConfigError(std::string(name) + " must lie in (0,1], got " + std::to_string(v));
    }
}

}  // namespace

void validate(const PipelineConfig& c) {
    require_fraction(c.coverage_threshold, "coverage_threshold");
    require_fraction(c.top_fraction, "top_fraction");
    require_fraction(c.proposal_overlap_fraction, "proposal_overlap_fraction");
    if (c.min_tile_side < 1) throw ConfigError("min_tile_side must be >= 1");
    if (!(c.elongation_ratio >= 1.0)) throw ConfigError("elongation_ratio must be >= 1");
    if (c.part_count_threshold < 0) throw ConfigError("part_count_threshold must be >= 0");
    if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) throw ConfigError("temperature must be > 0");
    if (!(c.harmonic_epsilon > 0.0 && c.harmonic_epsilon <= 1.0)) {
        throw ConfigError("harmonic_epsilon must lie in (0,1]");
    }
    if (c.connectivity != 4 && c.connectivity != 8) throw ConfigError("connectivity must be 4 or 8");
    if (c.pixel_bins < 2) throw ConfigError("pixel_bins must be >= 2");
}

}  // namespace vand
