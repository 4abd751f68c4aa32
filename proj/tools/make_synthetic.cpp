// Writes the synthetic mini-dataset used by the end-to-end tests:
//
//   make_synthetic <root>
//
// Two classes in the VisA layout. "candle" has four discs with wicks;
// "pipe_fryum" is one long bar of 28 stripes, enough parts to trigger strip
// tiling. Defects are bright spots with matching masks. Output is a pure
// function of the code (raw mt19937 draws only).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "vand/image_io.hpp"

namespace fs = std::filesystem;
using namespace vand;

namespace {

constexpr int kGood = 6;
constexpr int kBad = 6;

struct Canvas {
    Image image;
    BinaryMask defects;
};

void fill_rect(Canvas& c, int x0, int y0, int w, int h, float v) {
    for (int y = std::max(0, y0); y < std::min(c.image.height(), y0 + h); ++y) {
        for (int x = std::max(0, x0); x < std::min(c.image.width(), x0 + w); ++x) c.image(y, x) = {v, v, v};
    }
}

void fill_disc(Canvas& c, int cx, int cy, int r, float v, bool defect = false) {
    for (int y = std::max(0, cy - r); y <= std::min(c.image.height() - 1, cy + r); ++y) {
        for (int x = std::max(0, cx - r); x <= std::min(c.image.width() - 1, cx + r); ++x) {
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
            c.image(y, x) = {v, v, v};
            if (defect) c.defects(y, x) = 1;
        }
    }
}

int draw(std::mt19937& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); }

Canvas candle(int index, bool bad) {
    std::mt19937 rng(1000u + static_cast<unsigned>(index) * 2u + (bad ? 1u : 0u));
    Canvas c{Image(360, 480, Rgb{0.15f, 0.15f, 0.15f}), BinaryMask(360, 480, 0)};
    fill_rect(c, 0, 172, 480, 16, 0.02f);
    const int centres[4][2] = {{120, 90}, {360, 90}, {120, 270}, {360, 270}};
    for (const auto& [cx, cy] : centres) {
        fill_disc(c, cx + draw(rng, -3, 3), cy + draw(rng, -3, 3), 45, 0.7f);
    }
    for (const auto& [cx, cy] : centres) fill_disc(c, cx, cy, 10, 0.95f);
    if (bad) {
        const int spots = 1 + index % 2;
        for (int s = 0; s < spots; ++s) {
            const auto& [cx, cy] = centres[draw(rng, 0, 3)];
            fill_disc(c, cx + draw(rng, 18, 28) * (rng() % 2 ? 1 : -1), cy + draw(rng, 18, 28) * (rng() % 2 ? 1 : -1),
                      draw(rng, 4, 7), 1.0f, true);
        }
    }
    return c;
}

Canvas pipe_fryum(int index, bool bad) {
    std::mt19937 rng(2000u + static_cast<unsigned>(index) * 2u + (bad ? 1u : 0u));
    Canvas c{Image(240, 640, Rgb{0.1f, 0.1f, 0.1f}), BinaryMask(240, 640, 0)};
    const int x0 = 40 + draw(rng, -4, 4);
    const int y0 = 90 + draw(rng, -4, 4);
    for (int s = 0; s < 28; ++s) fill_rect(c, x0 + 20 * s, y0, 20, 60, s % 2 ? 0.85f : 0.6f);
    if (bad) {
        const int spots = 1 + index % 3;
        for (int s = 0; s < spots; ++s) {
            fill_disc(c, x0 + draw(rng, 10, 550), y0 + draw(rng, 12, 48), draw(rng, 3, 6), 1.0f, true);
        }
    }
    return c;
}

void write_class(const fs::path& root, const std::string& name, Canvas (*make)(int, bool)) {
    const fs::path base = root / name;
    fs::create_directories(base / "test" / "good");
    fs::create_directories(base / "test" / "bad");
    fs::create_directories(base / "ground_truth" / "bad");
    for (int i = 0; i < kGood; ++i) {
        const std::string stem = "g" + std::to_string(i);
        io::write_image(base / "test" / "good" / (stem + ".png"), make(i, false).image);
    }
    for (int i = 0; i < kBad; ++i) {
        const std::string stem = "b" + std::to_string(i);
        const Canvas c = make(i, true);
        io::write_image(base / "test" / "bad" / (stem + ".png"), c.image);
        io::write_mask(base / "ground_truth" / "bad" / (stem + ".png"), c.defects);
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2 || argv[1][0] == '-') {
        std::cerr << "usage: make_synthetic <root>\n";
        return 2;
    }
    try {
        write_class(argv[1], "candle", candle);
        write_class(argv[1], "pipe_fryum", pipe_fryum);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
