#include "coret/provider.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coret/error.hpp"

namespace coret {
namespace {

using nlohmann::json;

httplib::Headers auth_headers() {
    httplib::Headers h;
    if (const char* token = std::getenv(kProviderTokenEnv); token && *token)
        h.emplace("Authorization", std::string("Bearer ") + token);
    return h;
}

httplib::Client make_client(const std::string& endpoint, std::chrono::milliseconds timeout) {
    httplib::Client cli(endpoint);
    if (!cli.is_valid()) throw Error("invalid provider endpoint " + endpoint);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    return cli;
}

// Runs `call` until it yields a response with a non-5xx status.
template <typename F>
httplib::Result with_retries(const std::string& what, int attempts, F&& call) {
    std::string last;
    for (int i = 0; i < std::max(1, attempts); ++i) {
        if (i > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 << i));
        auto res = call();
        if (!res) {
            last = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last = "status " + std::to_string(res->status);
            continue;
        }
        return res;
    }
    throw RetryableError(what + " failed: " + last);
}

json parse_body(const httplib::Response& res, const std::string& what) {
    if (res.status != 200) throw ProtocolError(what + " returned status " + std::to_string(res.status) + ": " + res.body);
    try {
        return json::parse(res.body);
    } catch (const json::exception& e) {
        throw ProtocolError(what + " returned malformed JSON: " + e.what());
    }
}

json spans_json(std::span<const SegmentSpan> spans) {
    json out = json::array();
    for (const auto& s : spans)
        out.push_back({s.begin, s.end, s.kind == SegmentKind::Base ? "base" : "neighbor"});
    return out;
}

}  // namespace

ProviderHandle provider_handshake(const std::string& endpoint, int max_attempts) {
    ProviderHandle handle;
    handle.endpoint = endpoint;
    handle.max_attempts = max_attempts;
    auto cli = make_client(endpoint, handle.timeout);
    auto res = with_retries("GET /info", max_attempts, [&] { return cli.Get("/info", auth_headers()); });
    json doc = parse_body(*res, "GET /info");
    try {
        ProviderInfo& info = handle.info;
        info.model_id = doc.at("model_id").get<std::string>();
        info.dim = doc.at("dim").get<std::size_t>();
        info.max_tokens = doc.at("max_tokens").get<std::size_t>();
        info.normalizes = doc.at("normalizes").get<bool>();
        info.special_tokens = doc.at("special_tokens").get<std::vector<std::string>>();
        if (doc.contains("max_batch")) info.max_batch = doc.at("max_batch").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("bad /info document: ") + e.what());
    }
    if (handle.info.dim == 0) throw ProtocolError("provider declared dim 0");
    if (handle.info.max_batch == 0) throw ProtocolError("provider declared max_batch 0");
    const auto& sp = handle.info.special_tokens;
    if (std::find(sp.begin(), sp.end(), std::string(kDownToken)) == sp.end())
        throw ProtocolError("provider does not register the [DOWN] token");
    return handle;
}

std::vector<EmbeddingVector> provider_embed(const ProviderHandle& handle, std::span<const std::string> texts,
                                            std::span<const std::vector<SegmentSpan>> spans) {
    if (texts.empty()) throw Error("empty batch");
    if (!spans.empty() && spans.size() != texts.size()) throw Error("span list count does not match texts");
    auto cli = make_client(handle.endpoint, handle.timeout);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += handle.info.max_batch) {
        std::size_t end = std::min(texts.size(), start + handle.info.max_batch);
        json req = {{"texts", json::array()}};
        for (std::size_t i = start; i < end; ++i) req["texts"].push_back(texts[i]);
        if (!spans.empty()) {
            json all = json::array();
            for (std::size_t i = start; i < end; ++i) all.push_back(spans_json(spans[i]));
            req["segment_spans"] = std::move(all);
        }
        std::string body = req.dump();
        auto res = with_retries("POST /embed", handle.max_attempts, [&] {
            return cli.Post("/embed", auth_headers(), body, "application/json");
        });
        json doc = parse_body(*res, "POST /embed");
        if (doc.contains("errors") && !doc["errors"].empty())
            throw DataError("provider rejected input: " + doc["errors"].dump());
        if (!doc.contains("vectors") || !doc["vectors"].is_array())
            throw ProtocolError("embed response lacks a vectors array");
        const json& vectors = doc["vectors"];
        if (vectors.size() != end - start)
            throw ProtocolError("provider returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(end - start) + " texts");
        for (const json& v : vectors) {
            EmbeddingVector e;
            try {
                e.values = v.get<std::vector<double>>();
            } catch (const json::exception& ex) {
                throw ProtocolError(std::string("non-numeric vector: ") + ex.what());
            }
            if (e.dim() != handle.info.dim)
                throw ProtocolError("dimension mismatch: declared " + std::to_string(handle.info.dim) + ", got " +
                                    std::to_string(e.dim()));
            for (double x : e.values)
                if (!std::isfinite(x)) throw ProtocolError("non-finite vector component");
            if (!handle.info.normalizes) normalize(e);
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace coret
