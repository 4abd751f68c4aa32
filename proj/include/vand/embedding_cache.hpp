#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "vand/backends.hpp"

namespace vand::backends {

/// Raised for unreadable or unwritable cache locations; names the path.
class CacheError : public Error {
public:
    using Error::Error;
};

/// Text-embedding store keyed by (backend name, SHA-256 of the prompt).
/// Entries live in memory and, when a directory is given, as one JSON file
/// per entry: <dir>/<sha256(backend + "\n" + prompt)>.json
class EmbeddingCache {
public:
    /// In-memory only.
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path dir);

    static std::string key(const std::string& backend, const std::string& prompt);

    std::optional<Embedding> find(const std::string& backend, const std::string& prompt);
    void store(const std::string& backend, const std::string& prompt, const Embedding& embedding);

    const std::optional<std::filesystem::path>& directory() const { return dir_; }

    /// Removes every cache entry in `dir` (files ending in .json).
    static std::size_t clear(const std::filesystem::path& dir);

private:
    std::optional<std::filesystem::path> dir_;
    std::map<std::string, Embedding> memory_;
    std::mutex mutex_;
};

/// Embedder that answers text requests from the cache where possible and
/// sends all misses to the wrapped embedder as a single batch.
class CachedEmbedder final : public Embedder {
public:
    CachedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<EmbeddingCache> cache);

    BackendDescriptor descriptor() const override { return inner_->descriptor(); }
    std::vector<Embedding> embed_text(std::span<const std::string> prompts) override;
    Embedding embed_image(const Image& tile) override { return inner_->embed_image(tile); }

private:
    std::shared_ptr<Embedder> inner_;
    std::shared_ptr<EmbeddingCache> cache_;
};

}  // namespace vand::backends
