#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vand {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (shape mismatch, empty input, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or template document.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problems reading a dataset from disk.
class DatasetError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Rasters
// ---------------------------------------------------------------------------

/// Row-major H x W raster.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int height, int width, T fill = T{})
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(checked_area(height, width)), fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int y, int x) { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const { return data_[index(y, x)]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const {
        return height_ == other.height() && width_ == other.width();
    }

    bool operator==(const Raster&) const = default;

private:
    static long long checked_area(int height, int width) {
        if (height < 0 || width < 0) throw ContractError("raster dimensions must be non-negative");
        return static_cast<long long>(height) * width;
    }
    std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

struct Rgb {
    float r = 0.0f;
    float g = 0.0f;
    float b = 0.0f;
    bool operator==(const Rgb&) const = default;
};

/// Intensities in [0,1].
using Image = Raster<Rgb>;
/// 0 or 1 per pixel.
using BinaryMask = Raster<std::uint8_t>;
using RealRaster = Raster<double>;

/// Number of set pixels.
std::size_t popcount(const BinaryMask& mask);

/// Number of pixels set in both masks. Shapes must agree.
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

/// Mean of the three channels per pixel.
RealRaster to_gray(const Image& image);

/// Per-pixel anomaly evidence with every value finite and in [0,1].
class ScoreMap {
public:
    ScoreMap() = default;
    ScoreMap(int height, int width, double fill = 0.0);

    /// Wraps values that must already satisfy the invariant; throws ContractError otherwise.
    static ScoreMap checked(RealRaster values);

    int height() const { return values_.height(); }
    int width() const { return values_.width(); }
    double operator()(int y, int x) const { return values_(y, x); }
    std::span<const double> values() const { return values_.values(); }
    const RealRaster& raster() const { return values_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const { return values_.same_shape(other); }
    bool same_shape(const ScoreMap& other) const { return values_.same_shape(other.values_); }

    bool operator==(const ScoreMap&) const = default;

private:
    explicit ScoreMap(RealRaster values) : values_(std::move(values)) {}
    RealRaster values_;
};

/// Clips finite values into [0,1]. Throws ContractError naming the first
/// non-finite coordinate.
ScoreMap normalize_map(const RealRaster& values);

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct BBox {
    int x0 = 0;
    int y0 = 0;
    int w = 1;
    int h = 1;

    int x1() const { return x0 + w; }
    int y1() const { return y0 + h; }
    bool contains(const BBox& other) const {
        return other.x0 >= x0 && other.y0 >= y0 && other.x1() <= x1() && other.y1() <= y1();
    }
    bool operator==(const BBox&) const = default;
};

struct Dims {
    int height = 0;
    int width = 0;
    bool operator==(const Dims&) const = default;
};

template <typename T>
Dims dims_of(const Raster<T>& r) { return {r.height(), r.width()}; }

/// Shifts the window the minimal distance to lie inside the image; an axis that
/// exceeds the image is shrunk to the image extent.
BBox clamp_window(const BBox& window, Dims image);

// ---------------------------------------------------------------------------
// Domain records
// ---------------------------------------------------------------------------

enum class Label { normal, anomalous, unknown };

std::string to_string(Label label);
Label label_from_string(const std::string& text);

struct ImageSample {
    std::string id;
    Image pixels;
    std::string class_name;
    Label label = Label::unknown;
    std::optional<BinaryMask> gt_mask;
};

/// Throws ContractError if the sample violates its invariants.
void validate(const ImageSample& sample);

struct ForegroundComponent {
    int id = 0;
    BinaryMask mask;
    BBox bbox;
    int part_count = 0;
};

struct TilePlan {
    BBox window;
    int component_id = 0;
    bool operator==(const TilePlan&) const = default;
};

struct PipelineConfig {
    double coverage_threshold = 0.8;
    int min_tile_side = 352;
    double elongation_ratio = 1.5;
    int part_count_threshold = 20;
    double top_fraction = 0.25;
    double temperature = 0.01;
    double harmonic_epsilon = 1e-6;
    int connectivity = 8;
    double proposal_overlap_fraction = 0.5;
    int pixel_bins = 2001;
    bool exact_pixel_metric = false;

    bool operator==(const PipelineConfig&) const = default;
};

/// Throws ConfigError describing the first invalid field.
void validate(const PipelineConfig& config);

}  // namespace vand
