#include "vand/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "vand/image_io.hpp"

namespace vand::eval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    if (tp == 0) return 0.0;
    return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
    if (scores.empty()) throw ContractError("no scores to evaluate");
    for (double s : scores) {
        if (!std::isfinite(s)) throw ContractError("non-finite score");
    }
}

std::vector<std::size_t> order_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

F1Max f1_max(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto positives = static_cast<std::uint64_t>(std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
    if (positives == 0) throw ContractError("undefined metric: no positive labels");

    const auto order = order_descending(scores);
    F1Max best;  // +inf threshold, F1 0
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        const double f1 = f1_from_counts(tp, fp, positives - tp);
        if (f1 > best.f1) best = {f1, t};
    }
    return best;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto order = order_descending(scores);
    // Walk groups of tied scores from the top, summing trapezoids.
    double area = 0.0;
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        std::uint64_t dtp = 0, dfp = 0;
        while (i < order.size() && scores[order[i]] == t) {
            if (labels[order[i]]) ++dtp;
            else ++dfp;
            ++i;
        }
        area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
        tp += dtp;
        fp += dfp;
    }
    if (tp == 0 || fp == 0) throw ContractError("undefined metric: AUROC needs both classes");
    return area / (static_cast<double>(tp) * static_cast<double>(fp));
}

PixelHistogram::PixelHistogram(int bins) {
    if (bins < 2) throw ContractError("histogram needs at least 2 bins");
    positives_.assign(static_cast<std::size_t>(bins), 0);
    negatives_.assign(static_cast<std::size_t>(bins), 0);
}

int PixelHistogram::bin_of(double score) const {
    // Scores a hair below an edge (e.g. 3/2000 computed with rounding) still
    // land on that edge.
    const double pos = score * static_cast<double>(bins() - 1) + 1e-7;
    return std::clamp(static_cast<int>(std::floor(pos)), 0, bins() - 1);
}

void PixelHistogram::add(const ScoreMap& map, const BinaryMask& gt) {
    if (!map.same_shape(gt)) throw ContractError("anomaly map and ground-truth mask dimensions differ");
    auto values = map.values();
    auto truth = gt.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto& counts = truth[i] ? positives_ : negatives_;
        ++counts[static_cast<std::size_t>(bin_of(values[i]))];
    }
}

void PixelHistogram::merge(const PixelHistogram& other) {
    if (other.bins() != bins()) throw ContractError("cannot merge histograms with different bin counts");
    for (std::size_t i = 0; i < positives_.size(); ++i) {
        positives_[i] += other.positives_[i];
        negatives_[i] += other.negatives_[i];
    }
}

std::uint64_t PixelHistogram::positive_count() const {
    return std::accumulate(positives_.begin(), positives_.end(), std::uint64_t{0});
}

std::uint64_t PixelHistogram::negative_count() const {
    return std::accumulate(negatives_.begin(), negatives_.end(), std::uint64_t{0});
}

F1Max PixelHistogram::f1_max() const {
    const std::uint64_t positives = positive_count();
    if (positives == 0) throw ContractError("undefined metric: no positive pixels");
    F1Max best;
    std::uint64_t tp = 0, fp = 0;
    for (int k = bins() - 1; k >= 0; --k) {
        tp += positives_[static_cast<std::size_t>(k)];
        fp += negatives_[static_cast<std::size_t>(k)];
        const double f1 = f1_from_counts(tp, fp, positives - tp);
        if (f1 > best.f1) best = {f1, edge(k)};
    }
    return best;
}

double PixelHistogram::auroc() const {
    double area = 0.0;
    std::uint64_t tp = 0, fp = 0;
    for (int k = bins() - 1; k >= 0; --k) {
        const auto dtp = positives_[static_cast<std::size_t>(k)];
        const auto dfp = negatives_[static_cast<std::size_t>(k)];
        area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
        tp += dtp;
        fp += dfp;
    }
    if (tp == 0 || fp == 0) throw ContractError("undefined metric: AUROC needs both classes");
    return area / (static_cast<double>(tp) * static_cast<double>(fp));
}

namespace {

void check_pairing(std::span<const aggregate::SampleResult> results, std::span<const BinaryMask> gt_masks) {
    if (results.size() != gt_masks.size()) {
        throw ContractError("pixel_f1_max: " + std::to_string(results.size()) + " results but " +
                            std::to_string(gt_masks.size()) + " masks");
    }
}

}  // namespace

F1Max pixel_f1_max(std::span<const aggregate::SampleResult> results, std::span<const BinaryMask> gt_masks, int bins) {
    check_pairing(results, gt_masks);
    PixelHistogram hist(bins);
    for (std::size_t i = 0; i < results.size(); ++i) {
        try {
            hist.add(results[i].anomaly_map, gt_masks[i]);
        } catch (const ContractError& e) {
            throw ContractError("sample '" + results[i].sample_id + "': " + e.what());
        }
    }
    return hist.f1_max();
}

F1Max pixel_f1_max_exact(std::span<const aggregate::SampleResult> results, std::span<const BinaryMask> gt_masks) {
    check_pairing(results, gt_masks);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& map = results[i].anomaly_map;
        if (!map.same_shape(gt_masks[i])) {
            throw ContractError("sample '" + results[i].sample_id + "': map and mask dimensions differ");
        }
        scores.insert(scores.end(), map.values().begin(), map.values().end());
        for (auto v : gt_masks[i].values()) labels.push_back(v ? 1 : 0);
    }
    return f1_max(scores, labels);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DatasetListing list_dataset(const fs::path& root, const std::string& class_name) {
    const fs::path class_dir = root / class_name;
    if (!fs::is_directory(class_dir)) throw DatasetError("class directory " + class_dir.string() + " does not exist");

    DatasetListing listing;
    const fs::path mask_dir = class_dir / "ground_truth" / "bad";
    for (const auto& [split, label] : {std::pair{"good", Label::normal}, std::pair{"bad", Label::anomalous}}) {
        const fs::path dir = class_dir / "test" / split;
        if (!fs::is_directory(dir)) continue;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
            DatasetEntry e;
            e.id = std::string(split) + "/" + entry.path().stem().string();
            e.class_name = class_name;
            e.label = label;
            e.image_path = entry.path();
            if (label == Label::anomalous) {
                const fs::path mask = mask_dir / (entry.path().stem().string() + ".png");
                if (fs::is_regular_file(mask)) {
                    e.mask_path = mask;
                } else {
                    listing.warnings.push_back("anomalous sample " + e.id + " has no mask at " + mask.string() +
                                               "; excluded from pixel metrics");
                }
            }
            listing.entries.push_back(std::move(e));
        }
    }
    std::sort(listing.entries.begin(), listing.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < listing.entries.size(); ++i) {
        if (listing.entries[i].id == listing.entries[i - 1].id) {
            throw DatasetError("duplicate sample id " + listing.entries[i].id + " (" +
                               listing.entries[i - 1].image_path.string() + ", " +
                               listing.entries[i].image_path.string() + ")");
        }
    }
    if (listing.entries.empty()) listing.warnings.push_back("class directory " + class_dir.string() + " has no test images");
    return listing;
}

ImageSample load_sample(const DatasetEntry& entry) {
    ImageSample s;
    s.id = entry.id;
    s.class_name = entry.class_name;
    s.label = entry.label;
    try {
        s.pixels = io::read_image(entry.image_path);
    } catch (const io::ImageIoError& e) {
        throw DatasetError(e.what());
    }
    if (entry.label == Label::normal) {
        s.gt_mask = BinaryMask(s.pixels.height(), s.pixels.width(), 0);
    } else if (entry.mask_path) {
        BinaryMask mask;
        try {
            mask = io::read_mask(*entry.mask_path);
        } catch (const io::ImageIoError& e) {
            throw DatasetError(e.what());
        }
        if (!mask.same_shape(s.pixels)) {
            std::ostringstream msg;
            msg << "mask " << entry.mask_path->string() << " is " << mask.width() << "x" << mask.height()
                << " but image " << entry.image_path.string() << " is " << s.pixels.width() << "x" << s.pixels.height();
            throw DatasetError(msg.str());
        }
        s.gt_mask = std::move(mask);
    }
    validate(s);
    return s;
}

LoadedDataset load_dataset(const fs::path& root, const std::string& class_name) {
    DatasetListing listing = list_dataset(root, class_name);
    LoadedDataset out;
    out.warnings = std::move(listing.warnings);
    out.samples.reserve(listing.entries.size());
    for (const auto& e : listing.entries) out.samples.push_back(load_sample(e));
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

MetricSelection parse_metrics(const std::string& list) {
    MetricSelection m{false, false};
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "f1max") m.f1max = true;
        else if (item == "auroc") m.auroc = true;
        else if (!item.empty()) throw ConfigError("unknown metric '" + item + "' (expected f1max, auroc)");
    }
    if (!m.f1max && !m.auroc) throw ConfigError("no metrics selected");
    return m;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// JSON has no infinity; an "all negative" threshold is written as null.
nlohmann::json threshold_json(double t) { return std::isfinite(t) ? nlohmann::json(t) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json report_to_json(const ClassReport& r) {
    nlohmann::json doc{
        {"class_name", r.class_name},
        {"n_samples", r.n_samples},
        {"n_pixel_samples", r.n_pixel_samples},
        {"sample_f1max", r.sample_f1max},
        {"sample_threshold", threshold_json(r.sample_threshold)},
        {"pixel_f1max", optional_json(r.pixel_f1max)},
        {"pixel_threshold", r.pixel_threshold ? threshold_json(*r.pixel_threshold) : nlohmann::json(nullptr)},
    };
    if (r.sample_auroc || r.pixel_auroc) {
        doc["sample_auroc"] = optional_json(r.sample_auroc);
        doc["pixel_auroc"] = optional_json(r.pixel_auroc);
    }
    return doc;
}

ClassEvaluator::ClassEvaluator(std::string class_name, const PipelineConfig& config, MetricSelection metrics)
    : class_name_(std::move(class_name)), config_(config), metrics_(metrics), histogram_(config.pixel_bins) {}

void ClassEvaluator::add(Label label, double sample_score, const ScoreMap* map, const BinaryMask* gt) {
    if (label != Label::unknown) {
        scores_.push_back(sample_score);
        labels_.push_back(label == Label::anomalous ? 1 : 0);
    }
    if (map && gt) {
        histogram_.add(*map, *gt);
        if (config_.exact_pixel_metric) {
            exact_scores_.insert(exact_scores_.end(), map->values().begin(), map->values().end());
            for (auto v : gt->values()) exact_labels_.push_back(v ? 1 : 0);
        }
        ++n_pixel_samples_;
    }
}

ClassReport ClassEvaluator::finish() const {
    ClassReport r;
    r.class_name = class_name_;
    r.n_samples = static_cast<int>(scores_.size());
    r.n_pixel_samples = n_pixel_samples_;
    if (scores_.empty()) throw ContractError("class '" + class_name_ + "': no labelled samples to evaluate");

    const F1Max sample = f1_max(scores_, labels_);
    r.sample_f1max = sample.f1;
    r.sample_threshold = sample.threshold;

    if (histogram_.positive_count() > 0) {
        const F1Max pixel = config_.exact_pixel_metric ? f1_max(exact_scores_, exact_labels_) : histogram_.f1_max();
        r.pixel_f1max = pixel.f1;
        r.pixel_threshold = pixel.threshold;
    }
    if (metrics_.auroc) {
        const bool both = std::count(labels_.begin(), labels_.end(), 1) > 0 &&
                          std::count(labels_.begin(), labels_.end(), 0) > 0;
        if (both) r.sample_auroc = auroc(scores_, labels_);
        if (histogram_.positive_count() > 0 && histogram_.negative_count() > 0) r.pixel_auroc = histogram_.auroc();
    }
    return r;
}

ClassReport evaluate_class(std::span<const aggregate::SampleResult> results, std::span<const ImageSample> samples,
                           const PipelineConfig& config, MetricSelection metrics) {
    if (samples.empty()) throw ContractError("evaluate_class: no samples");
    ClassEvaluator evaluator(samples.front().class_name, config, metrics);
    for (const auto& s : samples) {
        const auto it = std::find_if(results.begin(), results.end(),
                                     [&](const aggregate::SampleResult& r) { return r.sample_id == s.id; });
        if (it == results.end()) throw ContractError("no result for sample '" + s.id + "'");
        const BinaryMask* gt = s.gt_mask ? &*s.gt_mask : nullptr;
        if (gt && !it->anomaly_map.same_shape(*gt)) {
            throw ContractError("sample '" + s.id + "': anomaly map and mask dimensions differ");
        }
        evaluator.add(s.label, it->sample_score, &it->anomaly_map, gt);
    }
    return evaluator.finish();
}

const std::vector<std::string>& visa_class_order() {
    static const std::vector<std::string> order{"pcb1",      "pcb2",      "pcb3",   "pcb4",       "capsules", "candle",
                                                "macaroni1", "macaroni2", "cashew", "chewinggum", "fryum",    "pipe_fryum"};
    return order;
}

const std::vector<ReferenceRow>& published_visa_results() {
    static const std::vector<ReferenceRow> rows{
        {"WinCLIP", "sample_f1max",
         {71.0, 67.1, 71.0, 74.9, 83.9, 89.4, 74.2, 69.8, 88.4, 94.8, 82.7, 80.7}, 79.0},
        {"zero-shot tiling (published)", "sample_f1max",
         {74.3, 67.1, 70.2, 87.3, 84.9, 82.1, 83.3, 76.9, 82.3, 94.4, 84.8, 90.0}, 81.5},
        {"WinCLIP", "pixel_f1max",
         {2.4, 4.7, 10.3, 32.0, 9.2, 22.5, 7.0, 1.0, 13.2, 41.1, 22.1, 12.3}, 14.8},
        {"zero-shot tiling (published)", "pixel_f1max",
         {29.5, 11.0, 4.7, 21.7, 31.9, 20.2, 24.6, 7.2, 24.5, 63.4, 31.3, 19.6}, 24.2},
    };
    return rows;
}

namespace {

struct Row {
    std::string label;
    std::string key;
    std::vector<std::optional<double>> values;  // fractions in [0,1]
    std::optional<double> mean;
};

std::string percent(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * *v);
    return buf;
}

std::string csv_value(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", 100.0 * *v);
    return buf;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : values) {
        if (!v) continue;
        sum += *v;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

}  // namespace

ReportTable report_table(std::span<const ClassReport> reports, MetricSelection metrics, bool include_reference) {
    // Column order.
    std::vector<const ClassReport*> columns;
    for (const auto& name : visa_class_order()) {
        for (const auto& r : reports) {
            if (r.class_name == name) columns.push_back(&r);
        }
    }
    for (const auto& r : reports) {
        if (std::find(columns.begin(), columns.end(), &r) == columns.end()) columns.push_back(&r);
    }

    std::vector<Row> rows;
    auto add_row = [&](const std::string& label, const std::string& key, auto getter) {
        Row row{label, key, {}, std::nullopt};
        for (const auto* c : columns) row.values.push_back(getter(*c));
        row.mean = mean_of(row.values);
        rows.push_back(std::move(row));
    };
    if (metrics.f1max) {
        add_row("sample F1-max", "sample_f1max", [](const ClassReport& r) { return std::optional<double>(r.sample_f1max); });
        add_row("pixel F1-max", "pixel_f1max", [](const ClassReport& r) { return r.pixel_f1max; });
    }
    if (metrics.auroc) {
        add_row("sample AUROC", "sample_auroc", [](const ClassReport& r) { return r.sample_auroc; });
        add_row("pixel AUROC", "pixel_auroc", [](const ClassReport& r) { return r.pixel_auroc; });
    }

    std::vector<std::string> header{"metric"};
    for (const auto* c : columns) header.push_back(c->class_name);
    header.push_back("Mean");

    std::vector<std::vector<std::string>> cells{header};
    for (const auto& row : rows) {
        std::vector<std::string> line{row.label};
        for (const auto& v : row.values) line.push_back(percent(v));
        line.push_back(percent(row.mean));
        cells.push_back(std::move(line));
    }
    if (include_reference && metrics.f1max) {
        for (const auto& ref : published_visa_results()) {
            std::vector<std::string> line{ref.method + " " + (ref.metric == "sample_f1max" ? "sample" : "pixel")};
            for (const auto* c : columns) {
                const auto& order = visa_class_order();
                const auto it = std::find(order.begin(), order.end(), c->class_name);
                if (it == order.end()) {
                    line.push_back("-");
                } else {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.1f", ref.values[static_cast<std::size_t>(it - order.begin())]);
                    line.push_back(buf);
                }
            }
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1f", ref.mean);
            line.push_back(buf);
            cells.push_back(std::move(line));
        }
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
    }
    std::ostringstream text;
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i == 0) {
                text << line[i] << std::string(widths[i] - line[i].size(), ' ');
            } else {
                text << "  " << std::string(widths[i] - line[i].size(), ' ') << line[i];
            }
        }
        text << '\n';
    }

    std::ostringstream csv;
    for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
    csv << '\n';
    for (const auto& row : rows) {
        csv << row.key;
        for (const auto& v : row.values) csv << ',' << csv_value(v);
        csv << ',' << csv_value(row.mean) << '\n';
    }

    nlohmann::json summary;
    summary["classes"] = nlohmann::json::array();
    for (const auto* c : columns) summary["classes"].push_back(report_to_json(*c));
    summary["mean"] = nlohmann::json::object();
    for (const auto& row : rows) summary["mean"][row.key] = optional_json(row.mean);
    std::vector<std::string> names;
    if (metrics.f1max) names.push_back("f1max");
    if (metrics.auroc) names.push_back("auroc");
    summary["metrics"] = names;

    return {text.str(), csv.str(), summary};
}

}  // namespace vand::eval
