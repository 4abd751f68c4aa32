#include "vand/backends.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <random>

#include "vand/digest.hpp"

namespace vand::backends {

nlohmann::json descriptor_to_json(const BackendDescriptor& d) {
    return {
        {"name", d.name},
        {"embedding_dim", d.embedding_dim},
        {"max_input_side", d.max_input_side},
        {"deterministic", d.deterministic},
        {"concurrent", d.concurrent},
        {"version", d.version},
    };
}

BackendDescriptor descriptor_from_json(const nlohmann::json& doc) {
    try {
        BackendDescriptor d;
        d.name = doc.at("name").get<std::string>();
        d.embedding_dim = doc.at("embedding_dim").get<int>();
        d.max_input_side = doc.at("max_input_side").get<int>();
        d.deterministic = doc.at("deterministic").get<bool>();
        d.concurrent = doc.value("concurrent", false);
        d.version = doc.at("version").get<int>();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed backend descriptor: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

Embedding Embedding::from_unit(std::vector<double> values) {
    if (values.empty()) throw ContractError("embedding must have at least one dimension");
    double sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw ContractError("embedding has a non-finite entry");
        sq += v * v;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
        throw ContractError("embedding norm " + std::to_string(std::sqrt(sq)) + " is not 1");
    }
    return Embedding(std::move(values));
}

Embedding Embedding::normalized(std::vector<double> values) {
    if (values.empty()) throw ContractError("embedding must have at least one dimension");
    double sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw ContractError("embedding has a non-finite entry");
        sq += v * v;
    }
    if (sq <= 0.0) throw ContractError("cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : values) v *= inv;
    return from_unit(std::move(values));
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw ContractError("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
    double dot = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
    assert(dot >= -1.0 - 1e-4 && dot <= 1.0 + 1e-4);
    return std::clamp(dot, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

using SharedMutex = std::shared_ptr<std::mutex>;

class SerialEmbedder final : public Embedder {
public:
    SerialEmbedder(std::shared_ptr<Embedder> inner, SharedMutex mutex)
        : inner_(std::move(inner)), mutex_(std::move(mutex)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    std::vector<Embedding> embed_text(std::span<const std::string> prompts) override {
        std::lock_guard lock(*mutex_);
        return inner_->embed_text(prompts);
    }
    Embedding embed_image(const Image& tile) override {
        std::lock_guard lock(*mutex_);
        return inner_->embed_image(tile);
    }

private:
    std::shared_ptr<Embedder> inner_;
    SharedMutex mutex_;
};

class SerialProposer final : public MaskProposer {
public:
    SerialProposer(std::shared_ptr<MaskProposer> inner, SharedMutex mutex)
        : inner_(std::move(inner)), mutex_(std::move(mutex)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    foreground::ProposalSet propose_masks(const Image& image) override {
        std::lock_guard lock(*mutex_);
        return inner_->propose_masks(image);
    }

private:
    std::shared_ptr<MaskProposer> inner_;
    SharedMutex mutex_;
};

class SerialSalient final : public SalientSegmenter {
public:
    SerialSalient(std::shared_ptr<SalientSegmenter> inner, SharedMutex mutex)
        : inner_(std::move(inner)), mutex_(std::move(mutex)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    BinaryMask salient_mask(const Image& image) override {
        std::lock_guard lock(*mutex_);
        return inner_->salient_mask(image);
    }

private:
    std::shared_ptr<SalientSegmenter> inner_;
    SharedMutex mutex_;
};

class SerialSegmenter final : public PromptSegmenter {
public:
    SerialSegmenter(std::shared_ptr<PromptSegmenter> inner, SharedMutex mutex)
        : inner_(std::move(inner)), mutex_(std::move(mutex)) {}
    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    ScoreMap segment_by_prompt(const Image& tile, const std::string& prompt) override {
        std::lock_guard lock(*mutex_);
        return inner_->segment_by_prompt(tile, prompt);
    }

private:
    std::shared_ptr<PromptSegmenter> inner_;
    SharedMutex mutex_;
};

// One lock per underlying object, so a model serving several roles is
// still entered by one thread at a time.
class LockTable {
public:
    template <typename Wrapper, typename Role>
    std::shared_ptr<Role> guard(const std::shared_ptr<Role>& role) {
        if (!role || role->descriptor().concurrent) return role;
        const void* key = dynamic_cast<const void*>(role.get());
        for (auto& [k, m] : locks_) {
            if (k == key) return std::make_shared<Wrapper>(role, m);
        }
        locks_.emplace_back(key, std::make_shared<std::mutex>());
        return std::make_shared<Wrapper>(role, locks_.back().second);
    }

private:
    std::vector<std::pair<const void*, SharedMutex>> locks_;
};

}  // namespace

BackendSet serialize_non_concurrent(const BackendSet& set) {
    LockTable locks;
    BackendSet out;
    out.embedder = locks.guard<SerialEmbedder>(set.embedder);
    out.proposer = locks.guard<SerialProposer>(set.proposer);
    out.salient = locks.guard<SerialSalient>(set.salient);
    out.segmenter = locks.guard<SerialSegmenter>(set.segmenter);
    return out;
}

nlohmann::json describe(const BackendSet& set) {
    nlohmann::json doc = nlohmann::json::object();
    if (set.embedder) doc["embedder"] = descriptor_to_json(set.embedder->descriptor());
    if (set.proposer) doc["proposer"] = descriptor_to_json(set.proposer->descriptor());
    if (set.salient) doc["salient"] = descriptor_to_json(set.salient->descriptor());
    if (set.segmenter) doc["segmenter"] = descriptor_to_json(set.segmenter->descriptor());
    return doc;
}

// ---------------------------------------------------------------------------
// Mock
// ---------------------------------------------------------------------------

std::uint64_t stable_hash(std::uint64_t seed, std::string_view tag, std::string_view text) {
    std::string buf;
    buf.reserve(8 + tag.size() + 1 + text.size());
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((seed >> (8 * i)) & 0xFF));
    buf.append(tag);
    buf.push_back('\0');
    buf.append(text);
    const auto digest = sha256(buf);
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | digest[static_cast<std::size_t>(i)];
    return h;
}

namespace {

// Uniform in [0,1) from the top 53 bits; independent of library distributions.
double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void require_image(const Image& image, const char* op) {
    if (image.height() < 1 || image.width() < 1) throw ContractError(std::string(op) + ": empty image");
}

}  // namespace

MockBackend::MockBackend(std::uint64_t seed) : seed_(seed) {}

BackendDescriptor MockBackend::descriptor() const {
    BackendDescriptor d;
    d.name = "mock:seed=" + std::to_string(seed_);
    d.embedding_dim = kEmbeddingDim;
    d.max_input_side = kMaxInputSide;
    d.deterministic = true;
    d.concurrent = true;
    d.version = 1;
    return d;
}

std::vector<Embedding> MockBackend::embed_text(std::span<const std::string> prompts) {
    if (prompts.empty()) throw ContractError("embed_text: empty prompt list");
    ++counters_.embed_text_calls;
    counters_.embed_text_prompts += static_cast<long>(prompts.size());
    std::vector<Embedding> out;
    out.reserve(prompts.size());
    for (const auto& prompt : prompts) {
        std::mt19937_64 rng(stable_hash(seed_, "text", prompt));
        std::vector<double> v(kEmbeddingDim);
        for (double& x : v) x = 2.0 * unit_double(rng()) - 1.0;
        out.push_back(Embedding::normalized(std::move(v)));
    }
    return out;
}

Embedding MockBackend::embed_image(const Image& tile) {
    require_image(tile, "embed_image");
    ++counters_.embed_image_calls;
    const RealRaster gray = to_gray(tile);
    constexpr int kGrid = 32;
    const int by = (gray.height() + kGrid - 1) / kGrid;
    const int bx = (gray.width() + kGrid - 1) / kGrid;
    std::vector<double> hist(kEmbeddingDim, 0.0);
    for (int y0 = 0; y0 < gray.height(); y0 += by) {
        for (int x0 = 0; x0 < gray.width(); x0 += bx) {
            double sum = 0.0;
            int n = 0;
            for (int y = y0; y < std::min(y0 + by, gray.height()); ++y) {
                for (int x = x0; x < std::min(x0 + bx, gray.width()); ++x) {
                    sum += gray(y, x);
                    ++n;
                }
            }
            const double mean = sum / n;
            const int bin = std::clamp(static_cast<int>(mean * kEmbeddingDim), 0, kEmbeddingDim - 1);
            hist[static_cast<std::size_t>(bin)] += 1.0;
        }
    }
    return Embedding::normalized(std::move(hist));
}

foreground::ProposalSet MockBackend::propose_masks(const Image& image) {
    require_image(image, "propose_masks");
    ++counters_.propose_calls;
    const RealRaster gray = to_gray(image);
    Raster<int> level(gray.height(), gray.width());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            level(y, x) = std::clamp(static_cast<int>(gray(y, x) * kQuantLevels), 0, kQuantLevels - 1);
        }
    }

    const long long area = static_cast<long long>(gray.height()) * gray.width();
    const std::size_t min_area = static_cast<std::size_t>(std::max<long long>(4, area / 4096));

    foreground::ProposalSet proposals;
    Raster<std::uint8_t> seen(gray.height(), gray.width(), 0);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            if (seen(y, x)) continue;
            const int q = level(y, x);
            BinaryMask region(gray.height(), gray.width(), 0);
            std::size_t count = 0;
            seen(y, x) = 1;
            stack.emplace_back(y, x);
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                region(cy, cx) = 1;
                ++count;
                const int ny[4] = {cy - 1, cy + 1, cy, cy};
                const int nx[4] = {cx, cx, cx - 1, cx + 1};
                for (int k = 0; k < 4; ++k) {
                    if (ny[k] < 0 || nx[k] < 0 || ny[k] >= gray.height() || nx[k] >= gray.width()) continue;
                    if (seen(ny[k], nx[k]) || level(ny[k], nx[k]) != q) continue;
                    seen(ny[k], nx[k]) = 1;
                    stack.emplace_back(ny[k], nx[k]);
                }
            }
            if (count >= min_area) proposals.push_back(std::move(region));
        }
    }
    return proposals;
}

BinaryMask MockBackend::salient_mask(const Image& image) {
    require_image(image, "salient_mask");
    ++counters_.salient_calls;
    const RealRaster gray = to_gray(image);
    std::vector<double> sorted(gray.values().begin(), gray.values().end());
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;

    BinaryMask mask(gray.height(), gray.width(), 0);
    auto src = gray.values();
    auto dst = mask.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > median ? 1 : 0;
    return mask;
}

ScoreMap MockBackend::segment_by_prompt(const Image& tile, const std::string& prompt) {
    require_image(tile, "segment_by_prompt");
    ++counters_.segment_calls;
    const RealRaster gray = to_gray(tile);
    double mean = 0.0;
    for (double v : gray.values()) mean += v;
    mean /= static_cast<double>(gray.size());

    double max_dev = 0.0;
    for (double v : gray.values()) max_dev = std::max(max_dev, std::abs(v - mean));

    std::mt19937_64 rng(stable_hash(seed_, "segment", prompt));
    const double gain = 0.5 + 0.5 * unit_double(rng());
    const double exponent = 0.5 + 1.5 * unit_double(rng());

    RealRaster out(gray.height(), gray.width(), 0.0);
    if (max_dev > 0.0) {
        auto src = gray.values();
        auto dst = out.values();
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i] = gain * std::pow(std::abs(src[i] - mean) / max_dev, exponent);
        }
    }
    return normalize_map(out);
}

BackendSet make_mock_backends(std::shared_ptr<MockBackend> mock) {
    return BackendSet{mock, mock, mock, mock};
}

}  // namespace vand::backends
