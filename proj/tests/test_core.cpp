#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "vand/config.hpp"
#include "vand/core.hpp"

using namespace vand;

TEST(ClampWindow, ShiftsMinimally) {
    EXPECT_EQ(clamp_window({-10, 0, 100, 100}, {200, 200}), (BBox{0, 0, 100, 100}));
    EXPECT_EQ(clamp_window({150, 130, 100, 100}, {200, 200}), (BBox{100, 100, 100, 100}));
}

TEST(ClampWindow, InsideIsUnchanged) { EXPECT_EQ(clamp_window({50, 50, 100, 100}, {200, 200}), (BBox{50, 50, 100, 100})); }

TEST(ClampWindow, OversizedAxisShrinksToImage) {
    const BBox out = clamp_window({0, 0, 352, 352}, {300, 300});
    EXPECT_EQ(out, (BBox{0, 0, 300, 300}));
    EXPECT_TRUE((BBox{0, 0, 300, 300}).contains(out));
    // Only the oversized axis shrinks.
    EXPECT_EQ(clamp_window({-40, 900, 352, 352}, {1000, 300}), (BBox{0, 648, 300, 352}));
}

TEST(NormalizeMap, InRangeIsIdentity) {
    RealRaster r(2, 3);
    double v = 0.0;
    for (auto& x : r.values()) x = (v += 0.15);
    const ScoreMap m = normalize_map(r);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(m.values()[i], r.values()[i]);
}

TEST(NormalizeMap, ClipsWithoutRescaling) {
    RealRaster r(2, 2, 0.5);
    r(0, 0) = 1.3;
    r(1, 1) = -0.2;
    const ScoreMap m = normalize_map(r);
    EXPECT_EQ(m(0, 0), 1.0);
    EXPECT_EQ(m(1, 1), 0.0);
    EXPECT_EQ(m(0, 1), 0.5);
}

TEST(NormalizeMap, NanIsRejectedWithCoordinate) {
    RealRaster r(3, 3, 0.1);
    r(2, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        normalize_map(r);
        FAIL() << "expected ContractError";
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("(2, 1)"), std::string::npos) << e.what();
    }
}

TEST(NormalizeMap, OutputsPassUnchanged) {
    RealRaster r(4, 4);
    int i = 0;
    for (auto& x : r.values()) x = (i++ % 7) * 0.3 - 0.4;
    const ScoreMap once = normalize_map(r);
    EXPECT_EQ(normalize_map(once.raster()), once);
}

TEST(ScoreMap, CheckedRejectsOutOfRange) {
    RealRaster r(1, 1, 1.5);
    EXPECT_THROW(ScoreMap::checked(r), ContractError);
    EXPECT_THROW(ScoreMap(2, 2, -0.1), ContractError);
}

TEST(ImageSample, MaskShapeMustMatch) {
    ImageSample s{"a", Image(4, 5), "c", Label::anomalous, BinaryMask(5, 4)};
    EXPECT_THROW(validate(s), ContractError);
    s.gt_mask = BinaryMask(4, 5);
    EXPECT_NO_THROW(validate(s));
    s.pixels = Image(0, 0);
    s.gt_mask.reset();
    EXPECT_THROW(validate(s), ContractError);
}

TEST(PipelineConfig, DefaultsAreValid) {
    const PipelineConfig c;
    EXPECT_NO_THROW(validate(c));
    EXPECT_EQ(c.min_tile_side, 352);
    EXPECT_EQ(c.part_count_threshold, 20);
    EXPECT_DOUBLE_EQ(c.coverage_threshold, 0.8);
    EXPECT_DOUBLE_EQ(c.elongation_ratio, 1.5);
}

TEST(PipelineConfig, RejectsBadFields) {
    PipelineConfig c;
    c.connectivity = 6;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.top_fraction = 0.0;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.temperature = -1.0;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(PipelineConfig, JsonRoundTrip) {
    PipelineConfig c;
    c.top_fraction = 0.5;
    c.connectivity = 4;
    c.exact_pixel_metric = true;
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(PipelineConfig, JsonRejectsUnknownKeyAndPartialIsAllowed) {
    EXPECT_THROW(config_from_json(nlohmann::json{{"top_fractoin", 0.5}}), ConfigError);
    const PipelineConfig c = config_from_json(nlohmann::json{{"min_tile_side", 224}});
    EXPECT_EQ(c.min_tile_side, 224);
    EXPECT_DOUBLE_EQ(c.top_fraction, 0.25);
    EXPECT_THROW(config_from_json(nlohmann::json{{"min_tile_side", 0}}), ConfigError);
}
