#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "vand/backends.hpp"

namespace vand::backends {

/// Client for the model-server protocol. JSON bodies over HTTP; images,
/// masks and maps travel as base64 PNG (16-bit RGB, 8-bit grey, 16-bit grey).
///
///   GET  /describe       -> {backend, descriptor_version, descriptor}
///   POST /embed_text     {prompts: [..]}          -> {.., embeddings: [[..]]}
///   POST /embed_image    {image}                  -> {.., embedding: [..]}
///   POST /propose_masks  {image}                  -> {.., masks: [..]}
///   POST /salient_mask   {image}                  -> {.., mask}
///   POST /segment        {image, prompt}          -> {.., map}
///
/// Every response names the backend and its descriptor version; a version
/// that goes backwards or a backend name that changes is a protocol error.
/// Failures carry {code, message} with a non-2xx status.
class RemoteBackend final : public Embedder, public MaskProposer, public SalientSegmenter, public PromptSegmenter {
public:
    /// Fetches /describe; throws TransportError when the server is unreachable.
    explicit RemoteBackend(std::string base_url, int timeout_seconds = 60);

    BackendDescriptor descriptor() const override;
    std::vector<Embedding> embed_text(std::span<const std::string> prompts) override;
    Embedding embed_image(const Image& tile) override;
    foreground::ProposalSet propose_masks(const Image& image) override;
    BinaryMask salient_mask(const Image& image) override;
    ScoreMap segment_by_prompt(const Image& tile, const std::string& prompt) override;

private:
    nlohmann::json request(const std::string& method, const std::string& path, const nlohmann::json* body);
    void check_envelope(const nlohmann::json& response);

    std::string base_url_;
    int timeout_seconds_;
    mutable std::mutex mutex_;
    BackendDescriptor descriptor_;
};

BackendSet make_remote_backends(const std::string& base_url);

/// Serves a BackendSet over the protocol above. Used to put in-process
/// models (or the mock) behind the wire.
class ModelServer {
public:
    ModelServer(BackendSet backends, BackendDescriptor advertised);
    ~ModelServer();
    ModelServer(const ModelServer&) = delete;
    ModelServer& operator=(const ModelServer&) = delete;

    /// Binds to a free port on 127.0.0.1 and serves on a background thread.
    int start();
    void stop();
    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    /// Bumps the advertised descriptor version.
    void bump_version();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace vand::backends
