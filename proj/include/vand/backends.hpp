#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vand/core.hpp"
#include "vand/foreground.hpp"

namespace vand::backends {

/// The model process could not be reached or answered garbage.
class TransportError : public Error {
public:
    using Error::Error;
};

/// A remote model rejected the request; `code` is the machine-readable reason.
class RemoteError : public Error {
public:
    RemoteError(std::string code, const std::string& message) : Error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct BackendDescriptor {
    std::string name;
    int embedding_dim = 0;
    int max_input_side = 0;
    bool deterministic = true;
    /// False means the orchestrator must serialize calls.
    bool concurrent = true;
    int version = 1;

    bool operator==(const BackendDescriptor&) const = default;
};

nlohmann::json descriptor_to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const nlohmann::json& doc);

/// Unit-norm vector (tolerance 1e-5) with finite entries.
class Embedding {
public:
    static constexpr double kNormTolerance = 1e-5;

    Embedding() = default;
    /// Throws ContractError unless `values` is already unit norm.
    static Embedding from_unit(std::vector<double> values);
    /// Scales to unit norm; throws ContractError on zero or non-finite input.
    static Embedding normalized(std::vector<double> values);

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    bool operator==(const Embedding&) const = default;

private:
    explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

/// Cosine similarity of unit vectors, clamped to [-1,1].
double cosine(const Embedding& a, const Embedding& b);

// The four model roles.

/// Joint text/image embedding model.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual std::vector<Embedding> embed_text(std::span<const std::string> prompts) = 0;
    virtual Embedding embed_image(const Image& tile) = 0;
};

/// Class-agnostic region proposals.
class MaskProposer {
public:
    virtual ~MaskProposer() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual foreground::ProposalSet propose_masks(const Image& image) = 0;
};

/// Binary salient-object segmentation.
class SalientSegmenter {
public:
    virtual ~SalientSegmenter() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual BinaryMask salient_mask(const Image& image) = 0;
};

/// Text-conditioned segmentation; output has the tile's dimensions.
class PromptSegmenter {
public:
    virtual ~PromptSegmenter() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual ScoreMap segment_by_prompt(const Image& tile, const std::string& prompt) = 0;
};

struct BackendSet {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<MaskProposer> proposer;
    std::shared_ptr<SalientSegmenter> salient;
    std::shared_ptr<PromptSegmenter> segmenter;
};

/// Wraps every role whose descriptor declares `concurrent = false` in a
/// mutex so that calls reach it one at a time.
BackendSet serialize_non_concurrent(const BackendSet& set);

/// Descriptors of all four roles keyed by role name.
nlohmann::json describe(const BackendSet& set);

// ---------------------------------------------------------------------------
// Mock
// ---------------------------------------------------------------------------

struct MockCounters {
    std::atomic<long> embed_text_calls{0};
    std::atomic<long> embed_text_prompts{0};
    std::atomic<long> embed_image_calls{0};
    std::atomic<long> propose_calls{0};
    std::atomic<long> salient_calls{0};
    std::atomic<long> segment_calls{0};
};

/// Deterministic stand-in for all four roles. Plausible rather than
/// accurate; safe for concurrent use.
///
///  - text: unit vector drawn from a generator seeded by (seed, prompt)
///  - image: 32-bin histogram of the block-downsampled grey tile
///  - proposals: 4-connected regions of grey quantised to 8 levels, regions
///    smaller than max(4, area / 4096) pixels dropped
///  - salient: grey strictly above the (lower) median
///  - segmentation: |grey - tile mean| / max deviation, shaped per prompt
///    by a seeded gain in [0.5, 1) and exponent in [0.5, 2)
class MockBackend final : public Embedder, public MaskProposer, public SalientSegmenter, public PromptSegmenter {
public:
    static constexpr int kEmbeddingDim = 32;
    static constexpr int kQuantLevels = 8;
    static constexpr int kMaxInputSide = 352;

    explicit MockBackend(std::uint64_t seed = 0);

    BackendDescriptor descriptor() const override;
    std::vector<Embedding> embed_text(std::span<const std::string> prompts) override;
    Embedding embed_image(const Image& tile) override;
    foreground::ProposalSet propose_masks(const Image& image) override;
    BinaryMask salient_mask(const Image& image) override;
    ScoreMap segment_by_prompt(const Image& tile, const std::string& prompt) override;

    const MockCounters& counters() const { return counters_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    MockCounters counters_;
};

/// All four roles backed by one shared mock.
BackendSet make_mock_backends(std::shared_ptr<MockBackend> mock);

/// First eight bytes of SHA-256 over (seed, tag, text); stable across platforms.
std::uint64_t stable_hash(std::uint64_t seed, std::string_view tag, std::string_view text);

}  // namespace vand::backends
