#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vand/core.hpp"

namespace vand::io {

class ImageIoError : public Error {
public:
    using Error::Error;
};

/// 8- or 16-bit grey, RGB or RGBA file scaled into [0,1] (alpha dropped).
Image read_image(const std::filesystem::path& path);

/// Any pixel > 0 is set.
BinaryMask read_mask(const std::filesystem::path& path);

/// 16-bit grey PNG, value round(v * 65535).
void write_heatmap(const std::filesystem::path& path, const ScoreMap& map);
ScoreMap read_heatmap(const std::filesystem::path& path);

/// 8-bit RGB PNG.
void write_image(const std::filesystem::path& path, const Image& image);
/// 8-bit grey PNG, 0 or 255.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

// In-memory PNG encodings used on the model-server wire.

/// 16-bit RGB.
std::vector<std::uint8_t> encode_image_png(const Image& image);
Image decode_image_png(const std::vector<std::uint8_t>& bytes);
/// 8-bit grey 0/255.
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);
BinaryMask decode_mask_png(const std::vector<std::uint8_t>& bytes);
/// 16-bit grey.
std::vector<std::uint8_t> encode_map_png(const ScoreMap& map);
ScoreMap decode_map_png(const std::vector<std::uint8_t>& bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace vand::io
