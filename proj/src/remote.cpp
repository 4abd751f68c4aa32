#include "vand/remote.hpp"

#include <atomic>

#include "httplib.h"
#include "vand/image_io.hpp"

namespace vand::backends {

namespace {

constexpr const char* kJson = "application/json";

std::string image_payload(const Image& image) { return io::base64_encode(io::encode_image_png(image)); }

template <typename F>
auto decode_payload(const nlohmann::json& doc, const char* field, F decode) {
    try {
        return decode(io::base64_decode(doc.at(field).get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("response field '") + field + "': " + e.what());
    } catch (const io::ImageIoError& e) {
        throw TransportError(std::string("response field '") + field + "': " + e.what());
    }
}

}  // namespace

RemoteBackend::RemoteBackend(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    const nlohmann::json doc = request("GET", "/describe", nullptr);
    try {
        descriptor_ = descriptor_from_json(doc.at("descriptor"));
        if (doc.at("backend").get<std::string>() != descriptor_.name) {
            throw TransportError("describe: backend name disagrees with descriptor");
        }
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed /describe response: ") + e.what());
    }
}

BackendDescriptor RemoteBackend::descriptor() const {
    std::lock_guard lock(mutex_);
    return descriptor_;
}

nlohmann::json RemoteBackend::request(const std::string& method, const std::string& path, const nlohmann::json* body) {
    // One client per call keeps this safe to use from several threads.
    httplib::Client client(base_url_);
    if (!client.is_valid()) throw TransportError("invalid server URL '" + base_url_ + "'");
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);

    httplib::Result res = method == "GET" ? client.Get(path) : client.Post(path, body->dump(), kJson);
    if (!res) {
        throw TransportError("cannot reach model server at " + base_url_ + path + ": " + httplib::to_string(res.error()));
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw TransportError(path + ": server answered with a non-JSON body (status " + std::to_string(res->status) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        const std::string code = doc.is_object() ? doc.value("code", "unknown") : "unknown";
        const std::string message = doc.is_object() ? doc.value("message", "") : "";
        throw RemoteError(code, path + ": " + code + ": " + message);
    }
    return doc;
}

void RemoteBackend::check_envelope(const nlohmann::json& doc) {
    std::string backend;
    int version = 0;
    try {
        backend = doc.at("backend").get<std::string>();
        version = doc.at("descriptor_version").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("response lacks backend/descriptor_version: ") + e.what());
    }
    bool refresh = false;
    {
        std::lock_guard lock(mutex_);
        if (backend != descriptor_.name) {
            throw RemoteError("protocol", "backend changed from '" + descriptor_.name + "' to '" + backend + "'");
        }
        if (version < descriptor_.version) {
            throw RemoteError("protocol", "descriptor version went backwards (" + std::to_string(descriptor_.version) +
                                              " -> " + std::to_string(version) + ")");
        }
        refresh = version > descriptor_.version;
    }
    if (refresh) {
        const nlohmann::json d = request("GET", "/describe", nullptr);
        BackendDescriptor fresh = descriptor_from_json(d.at("descriptor"));
        std::lock_guard lock(mutex_);
        if (fresh.version > descriptor_.version) descriptor_ = fresh;
    }
}

std::vector<Embedding> RemoteBackend::embed_text(std::span<const std::string> prompts) {
    if (prompts.empty()) throw ContractError("embed_text: empty prompt list");
    const nlohmann::json body{{"prompts", std::vector<std::string>(prompts.begin(), prompts.end())}};
    const nlohmann::json doc = request("POST", "/embed_text", &body);
    check_envelope(doc);
    std::vector<Embedding> out;
    try {
        for (const auto& e : doc.at("embeddings")) out.push_back(Embedding::from_unit(e.get<std::vector<double>>()));
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("embed_text response: ") + e.what());
    }
    if (out.size() != prompts.size()) throw TransportError("embed_text: wrong number of embeddings in response");
    return out;
}

Embedding RemoteBackend::embed_image(const Image& tile) {
    if (tile.height() < 1 || tile.width() < 1) throw ContractError("embed_image: empty image");
    const nlohmann::json body{{"image", image_payload(tile)}};
    const nlohmann::json doc = request("POST", "/embed_image", &body);
    check_envelope(doc);
    try {
        return Embedding::from_unit(doc.at("embedding").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("embed_image response: ") + e.what());
    }
}

foreground::ProposalSet RemoteBackend::propose_masks(const Image& image) {
    if (image.height() < 1 || image.width() < 1) throw ContractError("propose_masks: empty image");
    const nlohmann::json body{{"image", image_payload(image)}};
    const nlohmann::json doc = request("POST", "/propose_masks", &body);
    check_envelope(doc);
    foreground::ProposalSet out;
    try {
        for (const auto& m : doc.at("masks")) {
            BinaryMask mask = io::decode_mask_png(io::base64_decode(m.get<std::string>()));
            if (!mask.same_shape(image)) throw TransportError("propose_masks: proposal dimensions differ from image");
            out.push_back(std::move(mask));
        }
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("propose_masks response: ") + e.what());
    } catch (const io::ImageIoError& e) {
        throw TransportError(std::string("propose_masks response: ") + e.what());
    }
    return out;
}

BinaryMask RemoteBackend::salient_mask(const Image& image) {
    if (image.height() < 1 || image.width() < 1) throw ContractError("salient_mask: empty image");
    const nlohmann::json body{{"image", image_payload(image)}};
    const nlohmann::json doc = request("POST", "/salient_mask", &body);
    check_envelope(doc);
    BinaryMask mask = decode_payload(doc, "mask", io::decode_mask_png);
    if (!mask.same_shape(image)) throw TransportError("salient_mask: dimensions differ from image");
    return mask;
}

ScoreMap RemoteBackend::segment_by_prompt(const Image& tile, const std::string& prompt) {
    if (tile.height() < 1 || tile.width() < 1) throw ContractError("segment_by_prompt: empty image");
    const nlohmann::json body{{"image", image_payload(tile)}, {"prompt", prompt}};
    const nlohmann::json doc = request("POST", "/segment", &body);
    check_envelope(doc);
    ScoreMap map = decode_payload(doc, "map", io::decode_map_png);
    if (map.height() != tile.height() || map.width() != tile.width()) {
        throw TransportError("segment: map dimensions differ from tile");
    }
    return map;
}

BackendSet make_remote_backends(const std::string& base_url) {
    auto remote = std::make_shared<RemoteBackend>(base_url);
    return BackendSet{remote, remote, remote, remote};
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ModelServer::Impl {
    BackendSet backends;
    BackendDescriptor advertised;
    std::mutex mutex;
    httplib::Server server;

    nlohmann::json envelope() {
        std::lock_guard lock(mutex);
        return {{"backend", advertised.name}, {"descriptor_version", advertised.version}};
    }
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& doc) {
    res.status = status;
    res.set_content(doc.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"code", code}, {"message", message}});
}

Image request_image(const nlohmann::json& body) {
    return io::decode_image_png(io::base64_decode(body.at("image").get<std::string>()));
}

}  // namespace

ModelServer::ModelServer(BackendSet backends, BackendDescriptor advertised) : impl_(std::make_unique<Impl>()) {
    impl_->backends = serialize_non_concurrent(backends);
    impl_->advertised = std::move(advertised);

    auto handle = [impl = impl_.get()](auto fn) {
        return [impl, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                const nlohmann::json body = nlohmann::json::parse(req.body);
                nlohmann::json out = impl->envelope();
                fn(*impl, body, out);
                send_json(res, 200, out);
            } catch (const nlohmann::json::exception& e) {
                send_error(res, 400, "invalid_request", e.what());
            } catch (const io::ImageIoError& e) {
                send_error(res, 400, "invalid_request", e.what());
            } catch (const ContractError& e) {
                send_error(res, 422, "contract_violation", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    };

    auto& srv = impl_->server;
    srv.Get("/describe", [impl = impl_.get()](const httplib::Request&, httplib::Response& res) {
        nlohmann::json out = impl->envelope();
        std::lock_guard lock(impl->mutex);
        out["descriptor"] = descriptor_to_json(impl->advertised);
        send_json(res, 200, out);
    });
    srv.Post("/embed_text", handle([](Impl& impl, const nlohmann::json& body, nlohmann::json& out) {
        const auto prompts = body.at("prompts").get<std::vector<std::string>>();
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : impl.backends.embedder->embed_text(prompts)) {
            arr.push_back(std::vector<double>(e.values().begin(), e.values().end()));
        }
        out["embeddings"] = std::move(arr);
    }));
    srv.Post("/embed_image", handle([](Impl& impl, const nlohmann::json& body, nlohmann::json& out) {
        const Embedding e = impl.backends.embedder->embed_image(request_image(body));
        out["embedding"] = std::vector<double>(e.values().begin(), e.values().end());
    }));
    srv.Post("/propose_masks", handle([](Impl& impl, const nlohmann::json& body, nlohmann::json& out) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : impl.backends.proposer->propose_masks(request_image(body))) {
            arr.push_back(io::base64_encode(io::encode_mask_png(m)));
        }
        out["masks"] = std::move(arr);
    }));
    srv.Post("/salient_mask", handle([](Impl& impl, const nlohmann::json& body, nlohmann::json& out) {
        out["mask"] = io::base64_encode(io::encode_mask_png(impl.backends.salient->salient_mask(request_image(body))));
    }));
    srv.Post("/segment", handle([](Impl& impl, const nlohmann::json& body, nlohmann::json& out) {
        const ScoreMap map =
            impl.backends.segmenter->segment_by_prompt(request_image(body), body.at("prompt").get<std::string>());
        out["map"] = io::base64_encode(io::encode_map_png(map));
    }));
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send_error(res, res.status, "not_found", "no such endpoint");
    });
}

ModelServer::~ModelServer() { stop(); }

int ModelServer::start() {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw TransportError("model server could not bind a port");
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void ModelServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

void ModelServer::bump_version() {
    std::lock_guard lock(impl_->mutex);
    ++impl_->advertised.version;
}

}  // namespace vand::backends
