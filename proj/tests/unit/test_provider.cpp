#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coret/error.hpp"
#include "coret/provider.hpp"

using namespace coret;
using nlohmann::json;

namespace {

// Minimal in-process provider: deterministic vectors from text hashes.
class FakeProvider {
public:
    explicit FakeProvider(std::size_t dim, std::size_t returned_dim = 0, bool normalizes = true)
        : dim_(dim), returned_dim_(returned_dim ? returned_dim : dim), normalizes_(normalizes) {
        server_.Get("/info", [this](const httplib::Request& req, httplib::Response& res) {
            last_auth_ = req.get_header_value("Authorization");
            if (unready_calls_ > 0) {
                --unready_calls_;
                res.status = 503;
                return;
            }
            json info = {{"model_id", "fake-encoder"}, {"dim", dim_},          {"max_tokens", 512},
                         {"normalizes", normalizes_},  {"max_batch", 2},       {"special_tokens", {"[DOWN]"}}};
            res.set_content(info.dump(), "application/json");
        });
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json::parse(req.body);
            ++embed_calls_;
            if (body.contains("segment_spans")) last_spans_ = body["segment_spans"];
            json vectors = json::array();
            for (const auto& t : body["texts"]) {
                std::vector<double> v(returned_dim_);
                std::size_t h = std::hash<std::string>{}(t.get<std::string>());
                for (std::size_t j = 0; j < returned_dim_; ++j) v[j] = double((h >> (j % 48)) & 0xff) + 1.0;
                if (normalizes_) {
                    double n = 0;
                    for (double x : v) n += x * x;
                    for (double& x : v) x /= std::sqrt(n);
                }
                vectors.push_back(v);
            }
            res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeProvider() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> unready_calls_{0};
    std::atomic<int> embed_calls_{0};
    std::string last_auth_;
    json last_spans_;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::size_t dim_, returned_dim_;
    bool normalizes_;
};

}  // namespace

TEST_CASE("handshake reads the info document", "[provider]") {
    FakeProvider fake(16);
    auto handle = provider_handshake(fake.endpoint());
    CHECK(handle.info.model_id == "fake-encoder");
    CHECK(handle.info.dim == 16);
    CHECK(handle.info.max_tokens == 512);
    CHECK(handle.info.normalizes);
    CHECK(handle.info.max_batch == 2);
    auto again = provider_handshake(fake.endpoint());
    CHECK(again.info.dim == handle.info.dim);
}

TEST_CASE("embed returns one vector of declared dim per text", "[provider]") {
    FakeProvider fake(16);
    ProviderEmbedder embedder(provider_handshake(fake.endpoint()));
    std::vector<std::string> texts{"def f(): pass", "def f(): pass", "other", "more", "last"};
    auto vectors = embedder.embed_batch(texts);
    REQUIRE(vectors.size() == 5);
    CHECK(fake.embed_calls_ == 3);  // max_batch 2
    for (const auto& v : vectors) {
        CHECK(v.dim() == 16);
        CHECK_THAT(v.norm(), Catch::Matchers::WithinAbs(1.0, 1e-5));
    }
    CHECK(vectors[0].values == vectors[1].values);
    CHECK(embedder.embed("solo").dim() == 16);
}

TEST_CASE("segment spans are sent per text", "[provider]") {
    FakeProvider fake(4);
    auto handle = provider_handshake(fake.endpoint());
    std::vector<std::string> texts{"a[DOWN]b"};
    std::vector<std::vector<SegmentSpan>> spans{{{0, 1, SegmentKind::Base}, {7, 8, SegmentKind::Neighbor}}};
    provider_embed(handle, texts, spans);
    CHECK(fake.last_spans_ == json::parse(R"([[[0,1,"base"],[7,8,"neighbor"]]])"));
}

TEST_CASE("client normalizes when the provider does not", "[provider]") {
    FakeProvider fake(8, 0, false);
    auto handle = provider_handshake(fake.endpoint());
    std::vector<std::string> texts{"x"};
    auto v = provider_embed(handle, texts);
    CHECK_THAT(v[0].norm(), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("dimension mismatch is a protocol error", "[provider][error]") {
    FakeProvider fake(16, 8);
    auto handle = provider_handshake(fake.endpoint());
    std::vector<std::string> texts{"x"};
    CHECK_THROWS_AS(provider_embed(handle, texts), ProtocolError);
}

TEST_CASE("transport failures are retryable", "[provider][error]") {
    std::string endpoint;
    {
        FakeProvider fake(4);
        endpoint = fake.endpoint();
    }
    CHECK_THROWS_AS(provider_handshake(endpoint, 1), RetryableError);

    FakeProvider flaky(4);
    flaky.unready_calls_ = 1;
    CHECK(provider_handshake(flaky.endpoint(), 3).info.dim == 4);
    flaky.unready_calls_ = 5;
    CHECK_THROWS_AS(provider_handshake(flaky.endpoint(), 2), RetryableError);
}

TEST_CASE("bearer token comes from the environment", "[provider]") {
    FakeProvider fake(4);
    ::setenv(kProviderTokenEnv, "sekrit", 1);
    provider_handshake(fake.endpoint());
    ::unsetenv(kProviderTokenEnv);
    CHECK(fake.last_auth_ == "Bearer sekrit");
}
