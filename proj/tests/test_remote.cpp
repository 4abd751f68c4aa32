#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "vand/image_io.hpp"
#include "vand/remote.hpp"

using namespace vand;
using namespace vand::backends;

namespace {

Image pattern(int h, int w) {
    Image img(h, w, Rgb{0.1f, 0.1f, 0.1f});
    for (int y = h / 4; y < h / 2; ++y)
        for (int x = w / 4; x < w / 2; ++x) img(y, x) = {0.8f, 0.8f, 0.8f};
    return img;
}

class RemoteTest : public ::testing::Test {
protected:
    void SetUp() override {
        mock = std::make_shared<MockBackend>(5);
        server = std::make_unique<ModelServer>(make_mock_backends(mock), mock->descriptor());
        server->start();
    }
    std::shared_ptr<MockBackend> mock;
    std::unique_ptr<ModelServer> server;
};

}  // namespace

TEST_F(RemoteTest, DescribeMatchesServedBackend) {
    RemoteBackend remote(server->url());
    EXPECT_EQ(remote.descriptor(), mock->descriptor());
}

TEST_F(RemoteTest, RolesMatchInProcessResults) {
    RemoteBackend remote(server->url());
    MockBackend local(5);
    const std::vector<std::string> prompts{"a dent", "a photo of a good candle."};
    const auto got = remote.embed_text(prompts);
    const auto want = local.embed_text(prompts);
    ASSERT_EQ(got.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < want[i].dim(); ++k) EXPECT_EQ(got[i].values()[k], want[i].values()[k]);
    }

    // 8-bit-representable intensities survive the 16-bit PNG transport exactly.
    Image img(24, 32);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) {
            const float v = static_cast<float>((3 * x + 5 * y) % 256) / 255.0f;
            img(y, x) = {v, v, v};
        }
    const Image sent = io::decode_image_png(io::encode_image_png(img));
    EXPECT_EQ(remote.propose_masks(img), local.propose_masks(sent));
    EXPECT_EQ(remote.salient_mask(img), local.salient_mask(sent));
    EXPECT_EQ(remote.embed_image(img), local.embed_image(sent));

    const ScoreMap seg = remote.segment_by_prompt(img, "a scratch");
    const ScoreMap ref = local.segment_by_prompt(sent, "a scratch");
    ASSERT_TRUE(seg.same_shape(ref));
    for (std::size_t i = 0; i < ref.values().size(); ++i) {
        EXPECT_NEAR(seg.values()[i], ref.values()[i], 0.5 / 65535.0 + 1e-12);
    }
}

TEST_F(RemoteTest, ServerSideContractErrorArrivesAsRemoteError) {
    RemoteBackend remote(server->url());
    httplib::Client client(server->url());
    const auto res = client.Post("/embed_text", R"({"prompts": []})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    EXPECT_EQ(nlohmann::json::parse(res->body).at("code"), "contract_violation");

    const auto bad = client.Post("/segment", R"({"image": "!!!!"})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    EXPECT_EQ(nlohmann::json::parse(bad->body).at("code"), "invalid_request");
}

TEST_F(RemoteTest, ClientRejectsEmptyInputsLocally) {
    RemoteBackend remote(server->url());
    EXPECT_THROW(remote.embed_text({}), ContractError);
    EXPECT_THROW(remote.embed_image(Image(0, 0)), ContractError);
}

TEST_F(RemoteTest, VersionBumpRefreshesDescriptor) {
    RemoteBackend remote(server->url());
    server->bump_version();
    remote.salient_mask(pattern(8, 8));
    EXPECT_EQ(remote.descriptor().version, 2);
}

TEST(Remote, UnreachableServerIsTransportError) {
    EXPECT_THROW(RemoteBackend("http://127.0.0.1:9", 2), TransportError);
}

TEST(Remote, StoppedServerIsTransportError) {
    auto mock = std::make_shared<MockBackend>(0);
    auto server = std::make_unique<ModelServer>(make_mock_backends(mock), mock->descriptor());
    server->start();
    RemoteBackend remote(server->url(), 2);
    server->stop();
    EXPECT_THROW(remote.salient_mask(pattern(8, 8)), TransportError);
}

namespace {

// Answers /describe honestly and every other request with a fixed envelope.
class FakeServer {
public:
    FakeServer(std::string name, int version) {
        server_.Get("/describe", [](const httplib::Request&, httplib::Response& res) {
            const BackendDescriptor d{"fake", 2, 64, true, true, 3};
            res.set_content(nlohmann::json{{"backend", "fake"}, {"descriptor_version", 3},
                                           {"descriptor", descriptor_to_json(d)}}
                                .dump(),
                            "application/json");
        });
        server_.Post("/salient_mask", [name, version](const httplib::Request&, httplib::Response& res) {
            res.set_content(nlohmann::json{{"backend", name}, {"descriptor_version", version}, {"mask", ""}}.dump(),
                            "application/json");
        });
        server_.Post("/embed_image", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("<html>oops</html>", "text/html");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

std::string remote_error_code(RemoteBackend& remote) {
    try {
        remote.salient_mask(pattern(4, 4));
    } catch (const RemoteError& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST(Remote, BackendNameChangeIsProtocolError) {
    FakeServer fake("someone-else", 3);
    RemoteBackend remote(fake.url());
    EXPECT_EQ(remote_error_code(remote), "protocol");
}

TEST(Remote, DescriptorVersionGoingBackwardsIsProtocolError) {
    FakeServer fake("fake", 2);
    RemoteBackend remote(fake.url());
    EXPECT_EQ(remote_error_code(remote), "protocol");
}

TEST(Remote, NonJsonBodyIsTransportError) {
    FakeServer fake("fake", 3);
    RemoteBackend remote(fake.url());
    EXPECT_THROW(remote.embed_image(pattern(4, 4)), TransportError);
}
