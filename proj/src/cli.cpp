#include "vand/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "vand/config.hpp"
#include "vand/embedding_cache.hpp"
#include "vand/eval.hpp"
#include "vand/image_io.hpp"
#include "vand/pipeline.hpp"
#include "vand/remote.hpp"

#ifndef VAND_VERSION
#define VAND_VERSION "0.0.0"
#endif

namespace vand::cli {

namespace fs = std::filesystem;
using backends::BackendSet;

namespace {

/// Eval inputs (run directory) that are missing or inconsistent.
class RunDirError : public Error {
public:
    using Error::Error;
};

struct BackendOptions {
    std::string kind = "mock";
    std::string server_url;
    std::uint64_t seed = 0;
    std::string cache_dir;
    std::string templates;
};

/// Counts text-embedding traffic that reaches the model (below the cache).
class CountingEmbedder final : public backends::Embedder {
public:
    explicit CountingEmbedder(std::shared_ptr<backends::Embedder> inner) : inner_(std::move(inner)) {}
    backends::BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    std::vector<backends::Embedding> embed_text(std::span<const std::string> prompts) override {
        ++calls;
        count += static_cast<long>(prompts.size());
        return inner_->embed_text(prompts);
    }
    backends::Embedding embed_image(const Image& tile) override { return inner_->embed_image(tile); }

    std::atomic<long> calls{0};
    std::atomic<long> count{0};

private:
    std::shared_ptr<backends::Embedder> inner_;
};

struct Backends {
    BackendSet set;
    std::shared_ptr<CountingEmbedder> text_counter;
};

std::string resolve_cache_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("VAND_CACHE_DIR"); env && *env) return env;
    return {};
}

Backends open_backends(const BackendOptions& opt) {
    BackendSet raw;
    if (opt.kind == "mock") {
        raw = backends::make_mock_backends(std::make_shared<backends::MockBackend>(opt.seed));
    } else {
        if (opt.server_url.empty()) throw ConfigError("--backend server requires --server-url");
        raw = backends::make_remote_backends(opt.server_url);
    }
    Backends out;
    out.text_counter = std::make_shared<CountingEmbedder>(raw.embedder);
    const std::string dir = resolve_cache_dir(opt.cache_dir);
    auto cache = dir.empty() ? std::make_shared<backends::EmbeddingCache>()
                             : std::make_shared<backends::EmbeddingCache>(fs::path(dir));
    raw.embedder = std::make_shared<backends::CachedEmbedder>(out.text_counter, cache);
    out.set = backends::serialize_non_concurrent(raw);
    return out;
}

prompts::PromptTemplates open_templates(const std::string& path) {
    return path.empty() ? prompts::default_templates() : prompts::load_templates(path);
}

std::vector<std::string> classes_in(const fs::path& data) {
    if (!fs::is_directory(data)) throw DatasetError("dataset root " + data.string() + " does not exist");
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(data)) {
        if (e.is_directory() && fs::is_directory(e.path() / "test")) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw DatasetError("no class directories with a test/ folder under " + data.string());
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw RunDirError("missing " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw RunDirError(path.string() + ": " + e.what());
    }
}

fs::path heatmap_path(const fs::path& class_dir, const std::string& sample_id) {
    return class_dir / "heatmaps" / (sample_id + ".png");
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string data;
    std::vector<std::string> classes;
    std::string out;
    std::string config;
    int workers = 0;
};

struct SampleRecord {
    const eval::DatasetEntry* entry = nullptr;
    std::optional<pipeline::SampleOutcome> outcome;
    std::string error;
};

/// Returns the number of failed samples.
int run_class(const std::string& class_name, const RunOptions& opt, const BackendOptions& bopt, Backends& be,
              const prompts::PromptTemplates& templates, const PipelineConfig& config, std::ostream& err) {
    const eval::DatasetListing listing = eval::list_dataset(opt.data, class_name);
    for (const auto& w : listing.warnings) err << "warning: " << w << "\n";

    const pipeline::ClassPrompts prompts =
        pipeline::prepare_class(prompts::object_name_for_class(class_name), templates, *be.set.embedder);

    const fs::path class_dir = fs::path(opt.out) / class_name;
    fs::create_directories(class_dir / "heatmaps");

    std::vector<SampleRecord> records(listing.entries.size());
    for (std::size_t i = 0; i < records.size(); ++i) records[i].entry = &listing.entries[i];

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            SampleRecord& r = records[i];
            try {
                const ImageSample sample = eval::load_sample(*r.entry);
                pipeline::SampleOutcome o = pipeline::process_image(sample.id, sample.pixels, prompts, be.set, config);
                const fs::path hp = heatmap_path(class_dir, sample.id);
                fs::create_directories(hp.parent_path());
                io::write_heatmap(hp, o.result.anomaly_map);
                r.outcome = std::move(o);
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(records.size())));
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }

    std::string csv = "sample_id,sample_score,label\n";
    nlohmann::json details = nlohmann::json::array();
    int failed = 0;
    for (const auto& r : records) {
        nlohmann::json d;
        if (r.outcome) {
            csv += csv_field(r.entry->id) + "," + format_double(r.outcome->result.sample_score) + "," +
                   to_string(r.entry->label) + "\n";
            d = pipeline::outcome_to_json(*r.outcome);
            d["status"] = "ok";
        } else {
            ++failed;
            err << "error: " << class_name << "/" << r.entry->id << ": " << r.error << "\n";
            d = {{"sample_id", r.entry->id}, {"status", "failed"}, {"error", r.error}};
        }
        d["label"] = to_string(r.entry->label);
        details.push_back(std::move(d));
    }
    write_text(class_dir / "scores.csv", csv);
    write_text(class_dir / "samples.json", details.dump(2) + "\n");

    nlohmann::json run;
    run["class"] = class_name;
    run["object_name"] = prompts.ensemble.object_name;
    run["config"] = config_to_json(config);
    run["templates"] = prompts::templates_to_json(templates);
    run["backend"] = {{"kind", bopt.kind}, {"descriptors", backends::describe(be.set)}};
    run["seed"] = bopt.seed;
    run["version"] = VAND_VERSION;
    run["tile_score_rule"] = "softmax";
    run["samples"] = {{"total", records.size()}, {"failed", failed}};
    write_text(class_dir / "run.json", run.dump(2) + "\n");

    err << class_name << ": " << records.size() - failed << "/" << records.size() << " samples scored\n";
    if (!records.empty() && failed == static_cast<int>(records.size())) return -1;
    return failed;
}

int cmd_run(const RunOptions& opt, const BackendOptions& bopt, std::ostream& err) {
    const PipelineConfig config = opt.config.empty() ? PipelineConfig{} : load_config(opt.config);
    const prompts::PromptTemplates templates = open_templates(bopt.templates);
    const std::vector<std::string> classes = opt.classes.empty() ? classes_in(opt.data) : opt.classes;
    for (const auto& c : classes) eval::list_dataset(opt.data, c);  // fail fast on a bad class name

    Backends be = open_backends(bopt);
    bool any_class_failed = false;
    for (const auto& c : classes) {
        if (run_class(c, opt, bopt, be, templates, config, err) < 0) any_class_failed = true;
    }
    err << "text embedding requests: " << be.text_counter->calls << " call(s), " << be.text_counter->count
        << " prompt(s)\n";
    return any_class_failed ? kFailed : kOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string data;
    std::vector<std::string> classes;
    std::string out;
    std::string metrics = "f1max";
    bool reference = false;
};

struct ScoreRow {
    std::string id;
    double score = 0.0;
    Label label = Label::unknown;
};

std::vector<ScoreRow> read_scores(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw RunDirError("missing " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != "sample_id,sample_score,label") {
        throw RunDirError(path.string() + ": unexpected header");
    }
    std::vector<ScoreRow> rows;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line);
        if (fields.size() != 3) throw RunDirError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        ScoreRow row;
        row.id = fields[0];
        try {
            std::size_t used = 0;
            row.score = std::stod(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
            row.label = label_from_string(fields[2]);
        } catch (const std::exception& e) {
            throw RunDirError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

eval::ClassReport eval_class(const std::string& class_name, const EvalOptions& opt,
                             const eval::MetricSelection& metrics, std::ostream& err) {
    const fs::path class_dir = fs::path(opt.out) / class_name;
    const nlohmann::json run = read_json(class_dir / "run.json");
    const PipelineConfig config = config_from_json(run.at("config"));
    const std::vector<ScoreRow> rows = read_scores(class_dir / "scores.csv");
    if (rows.empty()) throw RunDirError(class_dir.string() + ": no scored samples");

    const eval::DatasetListing listing = eval::list_dataset(opt.data, class_name);
    std::map<std::string, const eval::DatasetEntry*> by_id;
    for (const auto& e : listing.entries) by_id[e.id] = &e;

    eval::ClassEvaluator evaluator(class_name, config, metrics);
    for (const auto& row : rows) {
        const auto it = by_id.find(row.id);
        if (it == by_id.end()) throw RunDirError("scored sample " + row.id + " is not in the dataset");
        const eval::DatasetEntry& entry = *it->second;
        const bool has_gt = entry.label == Label::normal || entry.mask_path.has_value();
        if (!has_gt) {
            evaluator.add(row.label, row.score, nullptr, nullptr);
            continue;
        }
        const fs::path hp = heatmap_path(class_dir, row.id);
        if (!fs::is_regular_file(hp)) throw RunDirError("missing heatmap for " + class_name + "/" + row.id + ": " + hp.string());
        const ScoreMap map = io::read_heatmap(hp);
        const BinaryMask gt = entry.mask_path ? io::read_mask(*entry.mask_path) : BinaryMask(map.height(), map.width(), 0);
        if (!map.same_shape(gt)) {
            throw RunDirError("heatmap " + hp.string() + " and mask " + entry.mask_path->string() + " differ in size");
        }
        evaluator.add(row.label, row.score, &map, &gt);
    }
    const std::size_t missing = listing.entries.size() - rows.size();
    if (missing > 0) err << "warning: " << class_name << ": " << missing << " sample(s) without a score\n";
    return evaluator.finish();
}

std::vector<std::string> scored_classes(const fs::path& out) {
    std::vector<std::string> classes;
    if (fs::is_directory(out)) {
        for (const auto& e : fs::directory_iterator(out)) {
            if (e.is_directory() && fs::is_regular_file(e.path() / "scores.csv")) {
                classes.push_back(e.path().filename().string());
            }
        }
    }
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) throw RunDirError("no run output (class/scores.csv) under " + out.string());
    return classes;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
    const eval::MetricSelection metrics = eval::parse_metrics(opt.metrics);
    const std::vector<std::string> classes = opt.classes.empty() ? scored_classes(opt.out) : opt.classes;

    std::vector<eval::ClassReport> reports;
    for (const auto& c : classes) reports.push_back(eval_class(c, opt, metrics, err));
    const eval::ReportTable table = eval::report_table(reports, metrics, opt.reference);

    const fs::path root(opt.out);
    write_text(root / "report.json", table.summary.dump(2) + "\n");
    write_text(root / "table.txt", table.text);
    write_text(root / "table.csv", table.csv);
    out << table.text;
    return kOk;
}

// ---------------------------------------------------------------------------
// cache
// ---------------------------------------------------------------------------

struct CacheOptions {
    std::string data;
    std::vector<std::string> classes;
    bool clear = false;
};

int cmd_cache(const CacheOptions& opt, const BackendOptions& bopt, std::ostream& out, std::ostream& err) {
    const std::string dir = resolve_cache_dir(bopt.cache_dir);
    if (dir.empty()) throw ConfigError("cache: no cache directory (use --cache-dir or VAND_CACHE_DIR)");
    if (opt.clear) {
        const std::size_t n = backends::EmbeddingCache::clear(dir);
        out << "removed " << n << " cache entr" << (n == 1 ? "y" : "ies") << " from " << dir << "\n";
        if (opt.classes.empty() && opt.data.empty()) return kOk;
    }
    std::vector<std::string> classes = opt.classes;
    if (classes.empty()) {
        if (opt.data.empty()) throw ConfigError("cache: give --class or --data");
        classes = classes_in(opt.data);
    }
    const prompts::PromptTemplates templates = open_templates(bopt.templates);
    Backends be = open_backends(bopt);
    for (const auto& c : classes) {
        const auto prepared = pipeline::prepare_class(prompts::object_name_for_class(c), templates, *be.set.embedder);
        out << c << ": " << prepared.normal.size() + prepared.abnormal.size() << " prompt embedding(s) cached\n";
    }
    err << "text embedding requests: " << be.text_counter->calls << " call(s), " << be.text_counter->count
        << " prompt(s)\n";
    return kOk;
}

void add_backend_flags(CLI::App& cmd, BackendOptions& b) {
    cmd.add_option("--backend", b.kind, "Model backend")->check(CLI::IsMember({"mock", "server"}));
    cmd.add_option("--server-url", b.server_url, "Model server base URL (for --backend server)");
    cmd.add_option("--seed", b.seed, "Mock backend seed");
    cmd.add_option("--cache-dir", b.cache_dir, "Prompt embedding cache directory (default: $VAND_CACHE_DIR)");
    cmd.add_option("--templates", b.templates, "Prompt template document (JSON)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot visual anomaly detection: foreground tiling, prompted scoring, evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", VAND_VERSION);

    RunOptions run_opt;
    BackendOptions run_backend;
    run_opt.workers = static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
    auto* run = app.add_subcommand("run", "Score every test sample of one or more classes");
    run->add_option("--data", run_opt.data, "Dataset root")->required();
    run->add_option("--class", run_opt.classes, "Class name (repeatable; default: all)");
    run->add_option("--out", run_opt.out, "Output root")->required();
    run->add_option("--config", run_opt.config, "Pipeline config (JSON)");
    run->add_option("--workers", run_opt.workers, "Worker threads")->check(CLI::PositiveNumber);
    add_backend_flags(*run, run_backend);

    EvalOptions eval_opt;
    auto* ev = app.add_subcommand("eval", "Compute F1-max (and AUROC) from a run directory");
    ev->add_option("--data", eval_opt.data, "Dataset root (ground truth)")->required();
    ev->add_option("--out", eval_opt.out, "Run output root")->required();
    ev->add_option("--class", eval_opt.classes, "Class name (repeatable; default: all scored)");
    ev->add_option("--metric", eval_opt.metrics, "Comma-separated metrics: f1max, auroc");
    ev->add_flag("--reference", eval_opt.reference, "Append published VisA reference rows to the table");

    CacheOptions cache_opt;
    BackendOptions cache_backend;
    auto* cache = app.add_subcommand("cache", "Precompute prompt embeddings or clear the cache");
    cache->add_option("--data", cache_opt.data, "Dataset root (classes default to its subdirectories)");
    cache->add_option("--class", cache_opt.classes, "Class name (repeatable)");
    cache->add_flag("--clear", cache_opt.clear, "Delete all cache entries first");
    add_backend_flags(*cache, cache_backend);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, eo;
        const int code = app.exit(e, o, eo);
        out << o.str();
        err << eo.str();
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(run_opt, run_backend, err);
        if (*ev) return cmd_eval(eval_opt, out, err);
        return cmd_cache(cache_opt, cache_backend, out, err);
    } catch (const backends::TransportError& e) {
        err << "transport error: " << e.what() << "\n";
        return kTransport;
    } catch (const backends::RemoteError& e) {
        err << "model server error: " << e.what() << "\n";
        return kTransport;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kUsage;
    } catch (const DatasetError& e) {
        err << "dataset error: " << e.what() << "\n";
        return kUsage;
    } catch (const backends::CacheError& e) {
        err << "cache error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailed;
    }
}

}  // namespace vand::cli
