#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

#include "coret/embedding.hpp"

namespace coret {

// Environment variable holding an optional bearer token for the provider.
inline constexpr const char* kProviderTokenEnv = "CORET_PROVIDER_TOKEN";

struct ProviderInfo {
    std::string model_id;
    std::size_t dim = 0;
    std::size_t max_tokens = 0;
    bool normalizes = false;
    std::vector<std::string> special_tokens;
    std::size_t max_batch = 32;  // optional in the document
};

struct ProviderHandle {
    std::string endpoint;  // http://host:port
    ProviderInfo info;
    std::string truncation = "tail";
    int max_attempts = 3;
    std::chrono::milliseconds timeout{30000};
};

// GET /info. Transport failures and 5xx answers raise RetryableError after
// max_attempts; malformed documents raise ProtocolError.
ProviderHandle provider_handshake(const std::string& endpoint, int max_attempts = 3);

// POST /embed in batches of info.max_batch. Vectors are normalized here when
// the provider does not declare normalization.
std::vector<EmbeddingVector> provider_embed(const ProviderHandle& handle, std::span<const std::string> texts,
                                            std::span<const std::vector<SegmentSpan>> spans = {});

class ProviderEmbedder : public Embedder {
public:
    explicit ProviderEmbedder(ProviderHandle handle) : handle_(std::move(handle)) {}

    std::size_t dim() const override { return handle_.info.dim; }
    std::string fingerprint() const override { return "provider:" + handle_.info.model_id; }
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                             std::span<const std::vector<SegmentSpan>> spans = {}) const override {
        return provider_embed(handle_, texts, spans);
    }
    const ProviderHandle& handle() const { return handle_; }

private:
    ProviderHandle handle_;
};

}  // namespace coret
