#include "vand/embedding_cache.hpp"

#include <fstream>
#include <set>
#include <system_error>

#include "vand/digest.hpp"

namespace vand::backends {

namespace fs = std::filesystem;

EmbeddingCache::EmbeddingCache(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) throw CacheError("cannot create cache directory " + dir_->string() + ": " + ec.message());
    if (!fs::is_directory(*dir_)) throw CacheError("cache path " + dir_->string() + " is not a directory");
}

std::string EmbeddingCache::key(const std::string& backend, const std::string& prompt) {
    return sha256_hex(backend + "\n" + prompt);
}

std::optional<Embedding> EmbeddingCache::find(const std::string& backend, const std::string& prompt) {
    const std::string k = key(backend, prompt);
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(k); it != memory_.end()) return it->second;
    if (!dir_) return std::nullopt;

    const fs::path file = *dir_ / (k + ".json");
    std::error_code ec;
    if (!fs::exists(file, ec)) return std::nullopt;
    std::ifstream in(file);
    if (!in) throw CacheError("cannot read cache entry " + file.string());
    try {
        nlohmann::json doc;
        in >> doc;
        // A digest collision across backends or prompts would be a bug; check anyway.
        if (doc.at("backend").get<std::string>() != backend || doc.at("input").get<std::string>() != prompt) {
            return std::nullopt;
        }
        Embedding e = Embedding::from_unit(doc.at("embedding").get<std::vector<double>>());
        memory_.emplace(k, e);
        return e;
    } catch (const nlohmann::json::exception& e) {
        throw CacheError("corrupt cache entry " + file.string() + ": " + e.what());
    }
}

void EmbeddingCache::store(const std::string& backend, const std::string& prompt, const Embedding& embedding) {
    const std::string k = key(backend, prompt);
    std::lock_guard lock(mutex_);
    memory_.insert_or_assign(k, embedding);
    if (!dir_) return;

    const fs::path file = *dir_ / (k + ".json");
    const fs::path tmp = *dir_ / (k + ".json.tmp");
    nlohmann::json doc{
        {"backend", backend},
        {"input", prompt},
        {"embedding", std::vector<double>(embedding.values().begin(), embedding.values().end())},
    };
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw CacheError("cannot write cache entry " + tmp.string() + " (permission denied?)");
        out << doc.dump() << '\n';
        if (!out) throw CacheError("failed writing cache entry " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) throw CacheError("cannot move cache entry into place at " + file.string() + ": " + ec.message());
}

std::size_t EmbeddingCache::clear(const fs::path& dir) {
    std::error_code ec;
    if (!fs::exists(dir, ec)) return 0;
    std::size_t removed = 0;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const auto ext = entry.path().extension();
        if (ext != ".json" && ext != ".tmp") continue;
        if (!fs::remove(entry.path(), ec) || ec) {
            throw CacheError("cannot remove cache entry " + entry.path().string() + ": " + ec.message());
        }
        ++removed;
    }
    if (ec) throw CacheError("cannot list cache directory " + dir.string() + ": " + ec.message());
    return removed;
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<Embedding> CachedEmbedder::embed_text(std::span<const std::string> prompts) {
    if (prompts.empty()) throw ContractError("embed_text: empty prompt list");
    const std::string backend = inner_->descriptor().name;

    std::vector<std::optional<Embedding>> found(prompts.size());
    std::vector<std::string> misses;
    std::set<std::string> queued;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        found[i] = cache_->find(backend, prompts[i]);
        if (!found[i] && queued.insert(prompts[i]).second) misses.push_back(prompts[i]);
    }
    if (!misses.empty()) {
        auto fresh = inner_->embed_text(misses);
        if (fresh.size() != misses.size()) throw ContractError("embed_text returned the wrong number of embeddings");
        for (std::size_t i = 0; i < misses.size(); ++i) cache_->store(backend, misses[i], fresh[i]);
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            if (!found[i]) found[i] = cache_->find(backend, prompts[i]);
        }
    }
    std::vector<Embedding> out;
    out.reserve(prompts.size());
    for (auto& e : found) out.push_back(std::move(*e));
    return out;
}

}  // namespace vand::backends
