#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vand/aggregate.hpp"
#include "vand/core.hpp"

namespace vand::eval {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct F1Max {
    double f1 = 0.0;
    /// Predictions are positive iff score >= threshold; +inf means "none".
    double threshold = std::numeric_limits<double>::infinity();
};

/// F1 from confusion counts; 0 when there are no true positives.
double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

/// Best F1 over the distinct scores (and +inf). Ties go to the highest
/// threshold. Throws ContractError on length mismatch, empty input or when no
/// label is positive.
F1Max f1_max(std::span<const double> scores, std::span<const int> labels);

/// Area under the ROC curve with ties counted half. Needs both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Streaming per-pixel confusion histogram with `bins` uniform bins whose
/// lower edges are k / (bins - 1). Integer counts, so merging is exact.
class PixelHistogram {
public:
    explicit PixelHistogram(int bins = 2001);

    int bins() const { return static_cast<int>(positives_.size()); }
    int bin_of(double score) const;
    double edge(int k) const { return static_cast<double>(k) / static_cast<double>(bins() - 1); }

    void add(const ScoreMap& map, const BinaryMask& gt);
    void merge(const PixelHistogram& other);

    std::uint64_t positive_count() const;
    std::uint64_t negative_count() const;

    /// Exact for scores lying on bin edges; otherwise the threshold is
    /// within one bin width of the exact optimum.
    F1Max f1_max() const;
    double auroc() const;

private:
    std::vector<std::uint64_t> positives_;
    std::vector<std::uint64_t> negatives_;
};

/// Histogram path over pooled pixels. Every result needs a mask.
F1Max pixel_f1_max(std::span<const aggregate::SampleResult> results, std::span<const BinaryMask> gt_masks, int bins);

/// Exact pooled computation (memory grows with the pixel count).
F1Max pixel_f1_max_exact(std::span<const aggregate::SampleResult> results, std::span<const BinaryMask> gt_masks);

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Layout: <root>/<class>/test/{good,bad}/*.{png,jpg,jpeg}
///         <root>/<class>/ground_truth/bad/<stem>.png
struct DatasetEntry {
    std::string id;  // "<good|bad>/<stem>"
    std::string class_name;
    Label label = Label::unknown;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> mask_path;
};

struct DatasetListing {
    std::vector<DatasetEntry> entries;  // sorted by id
    std::vector<std::string> warnings;
};

DatasetListing list_dataset(const std::filesystem::path& root, const std::string& class_name);

/// Normal samples get an all-false mask; anomalous samples get their mask
/// file or nothing. Throws DatasetError naming both files on a size mismatch.
ImageSample load_sample(const DatasetEntry& entry);

struct LoadedDataset {
    std::vector<ImageSample> samples;
    std::vector<std::string> warnings;
};

LoadedDataset load_dataset(const std::filesystem::path& root, const std::string& class_name);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MetricSelection {
    bool f1max = true;
    bool auroc = false;
};

/// Parses "f1max,auroc"; throws ConfigError on unknown names.
MetricSelection parse_metrics(const std::string& list);

struct ClassReport {
    std::string class_name;
    double sample_f1max = 0.0;
    double sample_threshold = 0.0;
    /// Absent when no evaluated sample has a positive pixel.
    std::optional<double> pixel_f1max;
    std::optional<double> pixel_threshold;
    int n_samples = 0;
    int n_pixel_samples = 0;
    std::optional<double> sample_auroc;
    std::optional<double> pixel_auroc;
};

nlohmann::json report_to_json(const ClassReport& report);

/// Accumulates one class sample by sample.
class ClassEvaluator {
public:
    ClassEvaluator(std::string class_name, const PipelineConfig& config, MetricSelection metrics = {});

    /// Unknown labels are ignored for sample metrics. Pixel metrics use the
    /// map only when both it and a ground-truth mask are given.
    void add(Label label, double sample_score, const ScoreMap* map, const BinaryMask* gt);

    ClassReport finish() const;

private:
    std::string class_name_;
    PipelineConfig config_;
    MetricSelection metrics_;
    std::vector<double> scores_;
    std::vector<int> labels_;
    PixelHistogram histogram_;
    std::vector<double> exact_scores_;
    std::vector<int> exact_labels_;
    int n_pixel_samples_ = 0;
};

/// Matches results to samples by id. Throws ContractError for a sample
/// without a result.
ClassReport evaluate_class(std::span<const aggregate::SampleResult> results, std::span<const ImageSample> samples,
                           const PipelineConfig& config, MetricSelection metrics = {});

/// Published VisA rows, percent values in visa_class_order() order.
struct ReferenceRow {
    std::string method;
    std::string metric;  // "sample_f1max" or "pixel_f1max"
    std::vector<double> values;
    double mean = 0.0;
};

const std::vector<std::string>& visa_class_order();
const std::vector<ReferenceRow>& published_visa_results();

struct ReportTable {
    std::string text;
    std::string csv;
    nlohmann::json summary;
};

/// Classes as columns (VisA order for known names, others after in input
/// order), unweighted "Mean" last. Values are printed as percentages.
ReportTable report_table(std::span<const ClassReport> reports, MetricSelection metrics = {},
                         bool include_reference = false);

}  // namespace vand::eval
