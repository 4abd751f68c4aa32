#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <unistd.h>

#include "oracles.hpp"
#include "vand/eval.hpp"
#include "vand/image_io.hpp"

using namespace vand;
using namespace vand::eval;

namespace fs = std::filesystem;

namespace {

aggregate::SampleResult result_with(const std::string& id, ScoreMap map, double score = 0.0) {
    aggregate::SampleResult r;
    r.sample_id = id;
    r.anomaly_map = std::move(map);
    r.sample_score = score;
    return r;
}

fs::path temp_root(const std::string& name) {
    auto p = fs::temp_directory_path() / ("vand_eval_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(F1Max, PerfectSeparation) {
    const F1Max r = f1_max(std::vector<double>{0.1, 0.9, 0.2, 0.8}, std::vector<int>{0, 1, 0, 1});
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.threshold, 0.8);
}

TEST(F1Max, ThresholdAtTopScore) {
    const F1Max r = f1_max(std::vector<double>{0.9, 0.8, 0.2}, std::vector<int>{1, 0, 0});
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.threshold, 0.9);
}

TEST(F1Max, Contracts) {
    EXPECT_THROW(f1_max(std::vector<double>{0.1}, std::vector<int>{0}), ContractError);
    EXPECT_THROW(f1_max(std::vector<double>{0.1, 0.2}, std::vector<int>{1}), ContractError);
    EXPECT_THROW(f1_max(std::vector<double>{}, std::vector<int>{}), ContractError);
    EXPECT_THROW(f1_max(std::vector<double>{NAN}, std::vector<int>{1}), ContractError);
}

TEST(F1Max, MatchesQuadraticOracleWithTies) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 300; ++t) {
        const int n = 1 + static_cast<int>(rng() % 40);
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> l(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 6) / 5.0;  // heavy ties
            l[i] = static_cast<int>(rng() % 2);
        }
        l[0] = 1;
        const F1Max got = f1_max(s, l);
        const oracle::F1 want = oracle::f1_max(s, l);
        ASSERT_EQ(got.f1, want.f1);
        ASSERT_EQ(got.threshold, want.threshold);
    }
}

TEST(F1Max, InvariantUnderIncreasingTransform) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(30), e(30);
        std::vector<int> l(30);
        for (int i = 0; i < 30; ++i) {
            s[i] = u(rng);
            e[i] = std::exp(3.0 * s[i]) - 7.0;
            l[i] = u(rng) < 0.3;
        }
        l[3] = 1;
        EXPECT_EQ(f1_max(s, l).f1, f1_max(e, l).f1);
    }
}

TEST(Auroc, MatchesPairwiseOracle) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(25);
        std::vector<int> l(25);
        for (int i = 0; i < 25; ++i) {
            s[i] = static_cast<double>(rng() % 8);
            l[i] = static_cast<int>(rng() % 2);
        }
        l[0] = 1;
        l[1] = 0;
        EXPECT_NEAR(auroc(s, l), oracle::auroc(s, l), 1e-12);
    }
}

TEST(PixelF1, MapEqualToMask) {
    BinaryMask gt(8, 8, 0);
    RealRaster r(8, 8, 0.0);
    for (int i = 2; i < 5; ++i) {
        gt(i, i) = 1;
        r(i, i) = 1.0;
    }
    const std::vector<aggregate::SampleResult> res{result_with("a", ScoreMap::checked(r))};
    const F1Max f = pixel_f1_max(res, std::vector<BinaryMask>{gt}, 2001);
    EXPECT_EQ(f.f1, 1.0);
}

TEST(PixelF1, AllZeroMapsGiveClosedForm) {
    BinaryMask gt(10, 10, 0);
    for (int x = 0; x < 7; ++x) gt(0, x) = 1;
    const std::vector<aggregate::SampleResult> res{result_with("a", ScoreMap(10, 10, 0.0)),
                                                   result_with("b", ScoreMap(10, 10, 0.0))};
    const std::vector<BinaryMask> masks{gt, BinaryMask(10, 10, 0)};
    const double p = 7.0 / 200.0;
    const F1Max f = pixel_f1_max(res, masks, 2001);
    EXPECT_NEAR(f.f1, 2.0 * p / (p + 1.0), 1e-15);
    EXPECT_EQ(f.threshold, 0.0);
}

TEST(PixelF1, SmallSetMatchesPooledBruteForce) {
    std::mt19937_64 rng(12);
    std::vector<aggregate::SampleResult> res;
    std::vector<ScoreMap> maps;
    std::vector<BinaryMask> masks;
    for (int i = 0; i < 3; ++i) {
        maps.push_back(oracle::random_edge_map(rng, 8, 8, 2001));
        masks.push_back(oracle::random_mask(rng, 8, 8, 0.2));
        res.push_back(result_with(std::to_string(i), maps.back()));
    }
    const F1Max hist = pixel_f1_max(res, masks, 2001);
    const F1Max exact = pixel_f1_max_exact(res, masks);
    const oracle::F1 want = oracle::pooled_pixel_f1(maps, masks);
    EXPECT_EQ(hist.f1, want.f1);
    EXPECT_EQ(hist.threshold, want.threshold);
    EXPECT_EQ(exact.f1, want.f1);
}

TEST(PixelHistogram, MergeIsExact) {
    std::mt19937_64 rng(2);
    PixelHistogram whole(101), a(101), b(101);
    for (int i = 0; i < 6; ++i) {
        const ScoreMap m = oracle::random_map(rng, 5, 5);
        const BinaryMask g = oracle::random_mask(rng, 5, 5, 0.3);
        whole.add(m, g);
        (i % 2 ? a : b).add(m, g);
    }
    a.merge(b);
    EXPECT_EQ(a.positive_count(), whole.positive_count());
    EXPECT_EQ(a.f1_max().f1, whole.f1_max().f1);
    EXPECT_EQ(a.auroc(), whole.auroc());
}

TEST(PixelHistogram, BinEdges) {
    PixelHistogram h(2001);
    EXPECT_EQ(h.bin_of(0.0), 0);
    EXPECT_EQ(h.bin_of(1.0), 2000);
    EXPECT_EQ(h.bin_of(3.0 / 2000.0), 3);
    EXPECT_EQ(h.bin_of(0.00149), 2);
}

TEST(Dataset, LayoutLabelsAndMasks) {
    const fs::path root = temp_root("layout");
    const fs::path cls = root / "widget";
    fs::create_directories(cls / "test" / "good");
    fs::create_directories(cls / "test" / "bad");
    fs::create_directories(cls / "ground_truth" / "bad");
    for (int i = 0; i < 5; ++i) {
        io::write_image(cls / "test" / "good" / ("n" + std::to_string(i) + ".png"), Image(6, 8));
        io::write_image(cls / "test" / "bad" / ("a" + std::to_string(i) + ".png"), Image(6, 8));
        if (i < 4) io::write_mask(cls / "ground_truth" / "bad" / ("a" + std::to_string(i) + ".png"), BinaryMask(6, 8, 1));
    }
    const LoadedDataset d = load_dataset(root, "widget");
    ASSERT_EQ(d.samples.size(), 10u);
    EXPECT_EQ(std::count_if(d.samples.begin(), d.samples.end(), [](auto& s) { return s.label == Label::anomalous; }), 5);
    EXPECT_EQ(d.samples[0].id, "bad/a0");
    EXPECT_EQ(d.samples[0].class_name, "widget");
    ASSERT_EQ(d.warnings.size(), 1u);  // bad/a4 lacks a mask
    for (const auto& s : d.samples) {
        if (s.label == Label::normal) {
            ASSERT_TRUE(s.gt_mask);
            EXPECT_EQ(popcount(*s.gt_mask), 0u);
        }
    }
    EXPECT_FALSE(d.samples[4].gt_mask.has_value());

    io::write_mask(cls / "ground_truth" / "bad" / "a4.png", BinaryMask(5, 8, 1));
    try {
        load_dataset(root, "widget");
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("a4.png"), std::string::npos);
        EXPECT_NE(msg.find("test/bad/a4.png"), std::string::npos);
        EXPECT_NE(msg.find("ground_truth/bad/a4.png"), std::string::npos);
    }
    fs::remove_all(root);
}

TEST(Dataset, EmptyClassWarns) {
    const fs::path root = temp_root("empty");
    fs::create_directories(root / "widget");
    const LoadedDataset d = load_dataset(root, "widget");
    EXPECT_TRUE(d.samples.empty());
    EXPECT_EQ(d.warnings.size(), 1u);
    EXPECT_THROW(load_dataset(root, "missing"), DatasetError);
    fs::remove_all(root);
}

TEST(EvaluateClass, PixelMetricsAbsentWithoutPositivePixels) {
    std::vector<ImageSample> samples{{"good/a", Image(4, 4), "c", Label::normal, BinaryMask(4, 4, 0)},
                                     {"bad/b", Image(4, 4), "c", Label::anomalous, std::nullopt}};
    std::vector<aggregate::SampleResult> res{result_with("bad/b", ScoreMap(4, 4, 0.3), 0.9),
                                             result_with("good/a", ScoreMap(4, 4, 0.1), 0.2)};
    const ClassReport r = evaluate_class(res, samples, PipelineConfig{}, {true, true});
    EXPECT_EQ(r.sample_f1max, 1.0);
    EXPECT_FALSE(r.pixel_f1max.has_value());
    EXPECT_EQ(r.n_pixel_samples, 1);
    EXPECT_EQ(*r.sample_auroc, 1.0);
    EXPECT_TRUE(report_to_json(r)["pixel_f1max"].is_null());
    res.pop_back();
    EXPECT_THROW(evaluate_class(res, samples, PipelineConfig{}), ContractError);
}

TEST(ParseMetrics, Names) {
    const MetricSelection m = parse_metrics("f1max,auroc");
    EXPECT_TRUE(m.f1max);
    EXPECT_TRUE(m.auroc);
    EXPECT_FALSE(parse_metrics("auroc").f1max);
    EXPECT_THROW(parse_metrics("aupro"), ConfigError);
}

TEST(ReportTable, MeansAndOrder) {
    ClassReport a{"pipe_fryum", 0.4, 0.5, 0.2, 0.5, 4, 2, {}, {}};
    ClassReport b{"candle", 0.2, 0.5, std::nullopt, std::nullopt, 4, 2, {}, {}};
    ClassReport c{"zzz", 0.6, 0.5, 0.4, 0.5, 4, 2, {}, {}};
    const std::vector<ClassReport> one{b};
    EXPECT_DOUBLE_EQ(report_table(one).summary["mean"]["sample_f1max"].get<double>(), 0.2);

    const std::vector<ClassReport> reports{c, a, b};
    const ReportTable t = report_table(reports);
    EXPECT_EQ(t.summary["classes"][0]["class_name"], "candle");
    EXPECT_EQ(t.summary["classes"][1]["class_name"], "pipe_fryum");
    EXPECT_EQ(t.summary["classes"][2]["class_name"], "zzz");
    EXPECT_NEAR(t.summary["mean"]["sample_f1max"].get<double>(), 0.4, 1e-15);
    EXPECT_NEAR(t.summary["mean"]["pixel_f1max"].get<double>(), 0.3, 1e-15);
    EXPECT_EQ(t.csv.substr(0, t.csv.find('\n')), "metric,candle,pipe_fryum,zzz,Mean");
    EXPECT_NE(t.text.find("Mean"), std::string::npos);
}

TEST(ReferenceRows, PublishedValues) {
    const auto& order = visa_class_order();
    ASSERT_EQ(order.size(), 12u);
    EXPECT_EQ(order.front(), "pcb1");
    EXPECT_EQ(order.back(), "pipe_fryum");
    const auto& rows = published_visa_results();
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_DOUBLE_EQ(rows[0].mean, 79.0);
    EXPECT_DOUBLE_EQ(rows[1].mean, 81.5);
    EXPECT_DOUBLE_EQ(rows[3].mean, 24.2);
    for (const auto& r : rows) {
        ASSERT_EQ(r.values.size(), 12u);
        const double mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / 12.0;
        // Published means are rounded from unrounded per-class values.
        EXPECT_NEAR(mean, r.mean, 0.1) << r.method << " " << r.metric;
    }
}

TEST(ReportTable, ReferenceRowsOnRequest) {
    const std::vector<ClassReport> reports{{"candle", 0.5, 0.5, 0.1, 0.5, 2, 2, {}, {}}};
    EXPECT_EQ(report_table(reports).text.find("WinCLIP"), std::string::npos);
    const std::string text = report_table(reports, {}, true).text;
    EXPECT_NE(text.find("WinCLIP sample"), std::string::npos);
    EXPECT_NE(text.find("89.4"), std::string::npos);
}
