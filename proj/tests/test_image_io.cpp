#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <unistd.h>

#include "vand/image_io.hpp"

using namespace vand;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("vand_io_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Heatmap, SixteenBitRoundTripWithinHalfStep) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RealRaster r(13, 17);
    for (auto& v : r.values()) v = u(rng);
    r(0, 0) = 0.0;
    r(0, 1) = 1.0;
    const ScoreMap map = ScoreMap::checked(r);
    const auto path = temp_file("heat.png");
    io::write_heatmap(path, map);
    const ScoreMap back = io::read_heatmap(path);
    ASSERT_TRUE(back.same_shape(map));
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(back.values()[i], map.values()[i], 0.5 / 65535.0 + 1e-15);
        EXPECT_EQ(back.values()[i], std::round(map.values()[i] * 65535.0) / 65535.0);
    }
    std::filesystem::remove(path);
}

TEST(Image, EightBitFileRoundTrip) {
    Image img(5, 7);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) img(y, x) = {x / 255.0f * 30, y / 255.0f * 40, 1.0f};
    const auto path = temp_file("img.png");
    io::write_image(path, img);
    const Image back = io::read_image(path);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) {
            EXPECT_NEAR(back(y, x).r, img(y, x).r, 1e-6);
            EXPECT_NEAR(back(y, x).g, img(y, x).g, 1e-6);
            EXPECT_NEAR(back(y, x).b, img(y, x).b, 1e-6);
        }
    std::filesystem::remove(path);
}

TEST(Mask, NonZeroIsSet) {
    BinaryMask m(4, 6, 0);
    m(1, 2) = 1;
    m(3, 5) = 1;
    const auto path = temp_file("mask.png");
    io::write_mask(path, m);
    EXPECT_EQ(io::read_mask(path), m);
    EXPECT_EQ(io::decode_mask_png(io::encode_mask_png(m)), m);
    std::filesystem::remove(path);
}

TEST(Io, MissingFileIsNamed) {
    try {
        io::read_image("/nonexistent/x.png");
        FAIL();
    } catch (const io::ImageIoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/x.png"), std::string::npos);
    }
}

TEST(Base64, RoundTripAllLengths) {
    for (std::size_t n = 0; n < 10; ++n) {
        std::vector<std::uint8_t> bytes(n);
        for (std::size_t i = 0; i < n; ++i) bytes[i] = static_cast<std::uint8_t>(250 - 37 * i);
        EXPECT_EQ(io::base64_decode(io::base64_encode(bytes)), bytes);
    }
    EXPECT_EQ(io::base64_encode({'M', 'a', 'n'}), "TWFu");
    EXPECT_THROW(io::base64_decode("abc"), io::ImageIoError);
}
