#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vand/scoring.hpp"

using namespace vand;
using namespace vand::scoring;
using backends::Embedding;

namespace {

Embedding random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n;
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = n(rng);
    return Embedding::normalized(std::move(v));
}

double dot(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

// Counts calls; returns a constant map per prompt.
class ConstSegmenter final : public backends::PromptSegmenter {
public:
    backends::BackendDescriptor descriptor() const override { return {"const", 0, 64, true, true, 1}; }
    ScoreMap segment_by_prompt(const Image& tile, const std::string& prompt) override {
        ++calls;
        return ScoreMap(tile.height(), tile.width(), prompt == "a" ? 0.5 : 0.25);
    }
    int calls = 0;
};

}  // namespace

TEST(MeanAlignment, Examples) {
    const Embedding e = Embedding::from_unit({1.0, 0.0});
    const Embedding neg = Embedding::from_unit({-1.0, 0.0});
    EXPECT_DOUBLE_EQ(mean_alignment(e, std::vector<Embedding>{e}), 1.0);
    EXPECT_DOUBLE_EQ(mean_alignment(e, std::vector<Embedding>{e, neg}), 0.0);
    EXPECT_THROW(mean_alignment(e, std::vector<Embedding>{}), ContractError);
}

TEST(MeanAlignment, MatchesPerPairDotProducts) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const Embedding img = random_unit(rng, 16);
        std::vector<Embedding> ps;
        double want = 0.0;
        for (int i = 0; i < 7; ++i) {
            ps.push_back(random_unit(rng, 16));
            want += dot(img, ps.back());
        }
        EXPECT_NEAR(mean_alignment(img, ps), want / 7.0, 1e-12);
    }
}

TEST(SoftmaxScore, Examples) {
    EXPECT_EQ(softmax_score(0.3, 0.3, 0.01), 0.5);
    EXPECT_NEAR(softmax_score(-1.0, 1.0, 0.01), 1.0, 1e-12);
    EXPECT_NEAR(softmax_score(0.1, 0.2, 0.1), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(softmax_score(0.1, 0.2, 0.1), 0.7311, 1e-4);
    EXPECT_THROW(softmax_score(0.0, 0.0, 0.0), ContractError);
}

TEST(SoftmaxScore, MatchesTwoWaySoftmaxWhereRepresentable) {
    for (double sn = -1.0; sn <= 1.0; sn += 0.125) {
        for (double sa = -1.0; sa <= 1.0; sa += 0.125) {
            const double t = 1.0;
            const double want = std::exp(sa / t) / (std::exp(sn / t) + std::exp(sa / t));
            EXPECT_NEAR(softmax_score(sn, sa, t), want, 1e-15);
        }
    }
}

TEST(TileScore, EqualAlignmentsGiveHalf) {
    const Embedding e = Embedding::from_unit({0.6, 0.8});
    const TileScore s = tile_score(e, std::vector<Embedding>{e}, std::vector<Embedding>{e}, 0.01);
    EXPECT_EQ(s.score, 0.5);
    EXPECT_DOUBLE_EQ(s.s_normal, 1.0);
}

TEST(HarmonicPool, Examples) {
    const ScoreMap a(2, 2, 0.5), b(2, 2, 0.25);
    EXPECT_EQ(harmonic_pool(std::vector<ScoreMap>{a, a, a}, 1e-6), a);
    EXPECT_NEAR(harmonic_pool(std::vector<ScoreMap>{a, b}, 1e-6)(0, 0), 1.0 / 3.0, 1e-15);
    const double z = harmonic_pool(std::vector<ScoreMap>{ScoreMap(1, 1, 1.0), ScoreMap(1, 1, 0.0)}, 1e-6)(0, 0);
    EXPECT_NEAR(z, 2.0 / (1.0 + 1e6), 1e-18);
    EXPECT_LT(z, 1e-5);
    EXPECT_THROW(harmonic_pool(std::vector<ScoreMap>{}, 1e-6), ContractError);
    EXPECT_THROW(harmonic_pool(std::vector<ScoreMap>{a, ScoreMap(2, 3)}, 1e-6), ContractError);
}

TEST(TilePixelMap, OneCallPerPromptAndPooling) {
    ConstSegmenter seg;
    PipelineConfig config;
    const Image tile(6, 5);
    EXPECT_EQ(tile_pixel_map(tile, std::vector<std::string>{"a"}, seg, config), ScoreMap(6, 5, 0.5));
    seg.calls = 0;
    const ScoreMap m = tile_pixel_map(tile, std::vector<std::string>{"a", "b"}, seg, config);
    EXPECT_EQ(seg.calls, 2);
    EXPECT_NEAR(m(3, 3), 1.0 / 3.0, 1e-15);
}

TEST(TilePixelMap, WrongShapeNamesPrompt) {
    class Bad final : public backends::PromptSegmenter {
    public:
        backends::BackendDescriptor descriptor() const override { return {"bad", 0, 64, true, true, 1}; }
        ScoreMap segment_by_prompt(const Image&, const std::string&) override { return ScoreMap(1, 1); }
    } bad;
    try {
        tile_pixel_map(Image(4, 4), std::vector<std::string>{"a dent"}, bad, PipelineConfig{});
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("a dent"), std::string::npos) << e.what();
    }
}
