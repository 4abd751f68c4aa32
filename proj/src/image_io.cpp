#include "vand/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace vand::io {

namespace {

const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 6};

// Converts any supported cv::Mat into float channels in [0,1], RGB order.
Image mat_to_image(const cv::Mat& src, const std::string& what) {
    if (src.empty()) throw ImageIoError("cannot decode image " + what);
    double scale = 0.0;
    switch (src.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        default: throw ImageIoError("unsupported bit depth in " + what);
    }
    cv::Mat rgb;
    switch (src.channels()) {
        case 1: cv::cvtColor(src, rgb, cv::COLOR_GRAY2RGB); break;
        case 3: cv::cvtColor(src, rgb, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(src, rgb, cv::COLOR_BGRA2RGB); break;
        default: throw ImageIoError("unsupported channel count in " + what);
    }
    cv::Mat f;
    rgb.convertTo(f, CV_32FC3, scale);
    Image out(f.rows, f.cols);
    for (int y = 0; y < f.rows; ++y) {
        const auto* row = f.ptr<cv::Vec3f>(y);
        for (int x = 0; x < f.cols; ++x) out(y, x) = Rgb{row[x][0], row[x][1], row[x][2]};
    }
    return out;
}

BinaryMask mat_to_mask(const cv::Mat& src, const std::string& what) {
    if (src.empty()) throw ImageIoError("cannot decode mask " + what);
    cv::Mat gray;
    if (src.channels() == 1) {
        gray = src;
    } else {
        // A pixel is set if any channel is non-zero.
        std::vector<cv::Mat> planes;
        cv::split(src, planes);
        gray = planes[0].clone();
        for (std::size_t i = 1; i < planes.size() && i < 3; ++i) cv::max(gray, planes[i], gray);
    }
    BinaryMask out(gray.rows, gray.cols, 0);
    for (int y = 0; y < gray.rows; ++y) {
        for (int x = 0; x < gray.cols; ++x) {
            const double v = gray.depth() == CV_16U ? gray.at<std::uint16_t>(y, x) : gray.at<std::uint8_t>(y, x);
            out(y, x) = v > 0 ? 1 : 0;
        }
    }
    return out;
}

std::uint16_t to_u16(double v) { return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0)); }

cv::Mat image_to_mat16(const Image& image) {
    cv::Mat m(image.height(), image.width(), CV_16UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = m.ptr<cv::Vec<std::uint16_t, 3>>(y);
        for (int x = 0; x < image.width(); ++x) {
            const Rgb& p = image(y, x);
            row[x] = {to_u16(p.b), to_u16(p.g), to_u16(p.r)};
        }
    }
    return m;
}

cv::Mat mask_to_mat(const BinaryMask& mask) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask(y, x) ? 255 : 0;
    }
    return m;
}

cv::Mat map_to_mat(const ScoreMap& map) {
    cv::Mat m(map.height(), map.width(), CV_16UC1);
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) m.at<std::uint16_t>(y, x) = to_u16(map(y, x));
    }
    return m;
}

ScoreMap mat_to_map(const cv::Mat& src, const std::string& what) {
    if (src.empty()) throw ImageIoError("cannot decode heatmap " + what);
    if (src.channels() != 1) throw ImageIoError("heatmap " + what + " must be single-channel");
    RealRaster values(src.rows, src.cols);
    for (int y = 0; y < src.rows; ++y) {
        for (int x = 0; x < src.cols; ++x) {
            values(y, x) = src.depth() == CV_16U ? src.at<std::uint16_t>(y, x) / 65535.0
                                                  : src.at<std::uint8_t>(y, x) / 255.0;
        }
    }
    return ScoreMap::checked(std::move(values));
}

void write_png(const std::filesystem::path& path, const cv::Mat& m) {
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m, kPngParams);
    } catch (const cv::Exception& e) {
        throw ImageIoError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw ImageIoError("cannot write " + path.string());
}

std::vector<std::uint8_t> encode_png(const cv::Mat& m) {
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".png", m, bytes, kPngParams)) throw ImageIoError("PNG encoding failed");
    return bytes;
}

cv::Mat decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) return {};
    return cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    return mat_to_image(cv::imread(path.string(), cv::IMREAD_UNCHANGED), path.string());
}

BinaryMask read_mask(const std::filesystem::path& path) {
    return mat_to_mask(cv::imread(path.string(), cv::IMREAD_UNCHANGED), path.string());
}

void write_heatmap(const std::filesystem::path& path, const ScoreMap& map) { write_png(path, map_to_mat(map)); }

ScoreMap read_heatmap(const std::filesystem::path& path) {
    return mat_to_map(cv::imread(path.string(), cv::IMREAD_UNCHANGED), path.string());
}

void write_image(const std::filesystem::path& path, const Image& image) {
    cv::Mat m(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x) {
            const Rgb& p = image(y, x);
            auto u8 = [](float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); };
            row[x] = {u8(p.b), u8(p.g), u8(p.r)};
        }
    }
    write_png(path, m);
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) { write_png(path, mask_to_mat(mask)); }

std::vector<std::uint8_t> encode_image_png(const Image& image) { return encode_png(image_to_mat16(image)); }
Image decode_image_png(const std::vector<std::uint8_t>& bytes) { return mat_to_image(decode(bytes), "<png payload>"); }
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) { return encode_png(mask_to_mat(mask)); }
BinaryMask decode_mask_png(const std::vector<std::uint8_t>& bytes) { return mat_to_mask(decode(bytes), "<png payload>"); }
std::vector<std::uint8_t> encode_map_png(const ScoreMap& map) { return encode_png(map_to_mat(map)); }
ScoreMap decode_map_png(const std::vector<std::uint8_t>& bytes) { return mat_to_map(decode(bytes), "<png payload>"); }

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ImageIoError("base64 payload length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw ImageIoError("invalid base64 payload");
    // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

}  // namespace vand::io
