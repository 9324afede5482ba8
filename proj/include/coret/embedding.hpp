#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coret/callgraph.hpp"

namespace coret {

inline constexpr std::uint32_t kDefaultVocabSize = 32768;
inline constexpr std::uint32_t kDefaultEmbeddingDim = 64;
inline constexpr std::size_t kDefaultMaxTokens = 1024;

// 64-bit FNV-1a; also the token hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

struct TokenOccurrence {
    std::uint32_t id;
    std::size_t offset;  // byte offset of the token in the input text
};

// Splits on whitespace and punctuation, then on underscores and camel-case
// humps; each lower-cased piece hashes to fnv1a64(piece) % vocab_size. The
// literal "[DOWN]" maps to the reserved id vocab_size.
std::vector<TokenOccurrence> tokenize_with_offsets(std::string_view text,
                                                   std::uint32_t vocab_size = kDefaultVocabSize);
std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t vocab_size = kDefaultVocabSize);

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const;
};

double dot(std::span<const double> a, std::span<const double> b);
// Throws Error on dimension mismatch, zero norm or non-finite input.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
void normalize(EmbeddingVector& v);

// Hashed bag-of-tokens linear encoder shared by queries and chunks.
struct ToyEmbedderParams {
    std::uint32_t vocab_size = kDefaultVocabSize;
    std::uint32_t dim = kDefaultEmbeddingDim;
    std::uint64_t seed = 0;
    std::size_t max_tokens = kDefaultMaxTokens;
    std::vector<double> projection;       // (vocab_size + 1) x dim; last row is [DOWN]
    std::vector<double> segment_offsets;  // 2 x dim: base, neighbor

    // Projection uniform in [-1/sqrt(dim), 1/sqrt(dim)], offsets zero.
    static ToyEmbedderParams initialize(std::uint32_t vocab_size = kDefaultVocabSize,
                                        std::uint32_t dim = kDefaultEmbeddingDim, std::uint64_t seed = 0);

    std::size_t rows() const noexcept { return static_cast<std::size_t>(vocab_size) + 1; }
    std::span<double> row(std::uint32_t id) { return {projection.data() + std::size_t(id) * dim, dim}; }
    std::span<const double> row(std::uint32_t id) const {
        return {projection.data() + std::size_t(id) * dim, dim};
    }
    std::span<double> offset(SegmentKind k) { return {segment_offsets.data() + index(k) * dim, dim}; }
    std::span<const double> offset(SegmentKind k) const {
        return {segment_offsets.data() + index(k) * dim, dim};
    }
    std::string fingerprint() const;

    static std::size_t index(SegmentKind k) { return k == SegmentKind::Base ? 0 : 1; }
};

void save_params(const ToyEmbedderParams& params, const std::filesystem::path& path);
ToyEmbedderParams load_params(const std::filesystem::path& path);

// Token weights of one text: weight(id) = count(id) / n over the first
// max_tokens tokens, plus the share of tokens in each segment kind.
struct TokenBag {
    std::vector<std::pair<std::uint32_t, double>> weights;  // sorted by id
    std::array<double, 2> segment_weights{0.0, 0.0};
    std::size_t token_count = 0;
};

// Throws Error("empty input") when the text has no tokens.
TokenBag make_token_bag(std::string_view text, std::span<const SegmentSpan> spans,
                        std::uint32_t vocab_size, std::size_t max_tokens);

struct EmbeddingTrace {
    std::vector<double> pooled;  // mean of token vectors before normalization
    double pooled_norm = 0.0;
    EmbeddingVector output;
};

// Throws Error("degenerate embedding") when the pooled vector is zero.
EmbeddingTrace embed_bag(const ToyEmbedderParams& params, const TokenBag& bag);
EmbeddingVector toy_embed(const ToyEmbedderParams& params, std::string_view text,
                          std::span<const SegmentSpan> spans = {});

// Sparse gradient with respect to ToyEmbedderParams.
struct ToyGradient {
    std::map<std::uint32_t, std::vector<double>> rows;
    std::array<std::vector<double>, 2> segments;

    void add_row(std::uint32_t id, std::span<const double> g, double weight, std::size_t dim);
    void add_segment(std::size_t kind, std::span<const double> g, double weight, std::size_t dim);
    void merge(const ToyGradient& other, double weight);
    double norm() const;
    // Deterministic step: params -= lr * gradient.
    void apply(ToyEmbedderParams& params, double learning_rate) const;
};

// Accumulates d(loss)/d(params) given d(loss)/d(output) for one embedding.
void backprop_embedding(const ToyEmbedderParams& params, const TokenBag& bag, const EmbeddingTrace& trace,
                        std::span<const double> grad_output, ToyGradient& grad);

// Anything that maps text (plus optional segment spans) to unit vectors.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::string fingerprint() const = 0;
    // `spans` is empty or holds one (possibly empty) span list per text.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                                     std::span<const std::vector<SegmentSpan>> spans = {}) const = 0;

    EmbeddingVector embed(std::string_view text, std::span<const SegmentSpan> spans = {}) const;
};

class ToyEmbedder : public Embedder {
public:
    explicit ToyEmbedder(std::shared_ptr<const ToyEmbedderParams> params) : params_(std::move(params)) {}
    explicit ToyEmbedder(ToyEmbedderParams params)
        : params_(std::make_shared<const ToyEmbedderParams>(std::move(params))) {}

    std::size_t dim() const override { return params_->dim; }
    std::string fingerprint() const override { return params_->fingerprint(); }
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                             std::span<const std::vector<SegmentSpan>> spans = {}) const override;
    const ToyEmbedderParams& params() const { return *params_; }

private:
    std::shared_ptr<const ToyEmbedderParams> params_;
};

}  // namespace coret
