#include "coret/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "coret/error.hpp"

namespace coret {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
// Digits and non-ASCII bytes count as lower case for hump splitting.
bool is_lowerish(unsigned char c) { return !is_upper(c); }

void emit_piece(std::string_view text, std::size_t begin, std::size_t end, std::uint32_t vocab,
                std::vector<TokenOccurrence>& out) {
    if (begin >= end) return;
    std::string lowered(text.substr(begin, end - begin));
    for (char& c : lowered)
        if (is_upper(static_cast<unsigned char>(c))) c = static_cast<char>(c - 'A' + 'a');
    out.push_back({static_cast<std::uint32_t>(fnv1a64(lowered) % vocab), begin});
}

// Splits one underscore-free run on camel-case humps.
void split_humps(std::string_view text, std::size_t begin, std::size_t end, std::uint32_t vocab,
                 std::vector<TokenOccurrence>& out) {
    std::size_t start = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
        auto prev = static_cast<unsigned char>(text[i - 1]);
        auto cur = static_cast<unsigned char>(text[i]);
        bool boundary = (is_lowerish(prev) && is_upper(cur)) ||
                        (is_upper(prev) && is_upper(cur) && i + 1 < end &&
                         is_lowerish(static_cast<unsigned char>(text[i + 1])) &&
                         std::isalpha(static_cast<unsigned char>(text[i + 1])));
        if (boundary) {
            emit_piece(text, start, i, vocab, out);
            start = i;
        }
    }
    emit_piece(text, start, end, vocab, out);
}

SegmentKind kind_at(std::span<const SegmentSpan> spans, std::size_t offset) {
    if (spans.empty()) return SegmentKind::Base;
    for (const auto& s : spans)
        if (offset >= s.begin && offset < s.end) return s.kind;
    // Separators sit between segments and always introduce a neighbor.
    return SegmentKind::Neighbor;
}

std::string params_header(const ToyEmbedderParams& p) {
    nlohmann::json h = {{"format", "coret-toy-params"},
                        {"vocab_size", p.vocab_size},
                        {"dim", p.dim},
                        {"seed", p.seed},
                        {"max_tokens", p.max_tokens}};
    return h.dump();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<TokenOccurrence> tokenize_with_offsets(std::string_view text, std::uint32_t vocab_size) {
    if (vocab_size == 0) throw Error("vocabulary size must be positive");
    std::vector<TokenOccurrence> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, kDownToken.size(), kDownToken) == 0) {
            out.push_back({vocab_size, i});
            i += kDownToken.size();
            continue;
        }
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && is_word_byte(static_cast<unsigned char>(text[end]))) ++end;
        std::size_t piece = i;
        for (std::size_t j = i; j <= end; ++j) {
            if (j == end || text[j] == '_') {
                split_humps(text, piece, j, vocab_size, out);
                piece = j + 1;
            }
        }
        i = end;
    }
    return out;
}

std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t vocab_size) {
    std::vector<std::uint32_t> ids;
    for (const auto& t : tokenize_with_offsets(text, vocab_size)) ids.push_back(t.id);
    return ids;
}

double EmbeddingVector::norm() const { return std::sqrt(dot(values, values)); }

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw Error("dimension mismatch");
    double na = a.norm(), nb = b.norm();
    if (!std::isfinite(na) || !std::isfinite(nb)) throw Error("non-finite vector");
    if (na == 0.0 || nb == 0.0) throw Error("zero-norm vector");
    return dot(a.values, b.values) / (na * nb);
}

void normalize(EmbeddingVector& v) {
    double n = v.norm();
    if (!std::isfinite(n) || n == 0.0) throw Error("degenerate embedding");
    for (double& x : v.values) x /= n;
}

ToyEmbedderParams ToyEmbedderParams::initialize(std::uint32_t vocab_size, std::uint32_t dim, std::uint64_t seed) {
    if (vocab_size == 0 || dim == 0) throw Error("vocabulary size and dimension must be positive");
    ToyEmbedderParams p;
    p.vocab_size = vocab_size;
    p.dim = dim;
    p.seed = seed;
    p.projection.resize(p.rows() * dim);
    p.segment_offsets.assign(2 * std::size_t(dim), 0.0);
    // Manual conversion keeps the stream identical across standard libraries.
    std::mt19937_64 rng(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& x : p.projection) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        x = (2.0 * u - 1.0) * bound;
    }
    return p;
}

std::string ToyEmbedderParams::fingerprint() const {
    std::uint64_t h = fnv1a64(params_header(*this));
    h = fnv1a64({reinterpret_cast<const char*>(projection.data()), projection.size() * sizeof(double)}, h);
    h = fnv1a64({reinterpret_cast<const char*>(segment_offsets.data()), segment_offsets.size() * sizeof(double)},
                h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("toy:") + buf;
}

void save_params(const ToyEmbedderParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << params_header(params) << '\n';
    out.write(reinterpret_cast<const char*>(params.projection.data()),
              static_cast<std::streamsize>(params.projection.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(params.segment_offsets.data()),
              static_cast<std::streamsize>(params.segment_offsets.size() * sizeof(double)));
    if (!out) throw Error("failed writing " + path.string());
}

ToyEmbedderParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::string header;
    std::getline(in, header);
    ToyEmbedderParams p;
    try {
        auto h = nlohmann::json::parse(header);
        if (h.at("format") != "coret-toy-params") throw DataError("not a parameter file: " + path.string());
        p.vocab_size = h.at("vocab_size").get<std::uint32_t>();
        p.dim = h.at("dim").get<std::uint32_t>();
        p.seed = h.at("seed").get<std::uint64_t>();
        p.max_tokens = h.at("max_tokens").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad parameter header in " + path.string() + ": " + e.what());
    }
    if (p.vocab_size == 0 || p.dim == 0) throw DataError("bad parameter header in " + path.string());
    p.projection.resize(p.rows() * p.dim);
    p.segment_offsets.resize(2 * std::size_t(p.dim));
    in.read(reinterpret_cast<char*>(p.projection.data()),
            static_cast<std::streamsize>(p.projection.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(p.segment_offsets.data()),
            static_cast<std::streamsize>(p.segment_offsets.size() * sizeof(double)));
    if (!in || in.peek() != std::char_traits<char>::eof())
        throw DataError("truncated or oversized parameter file " + path.string());
    return p;
}

TokenBag make_token_bag(std::string_view text, std::span<const SegmentSpan> spans, std::uint32_t vocab_size,
                        std::size_t max_tokens) {
    auto tokens = tokenize_with_offsets(text, vocab_size);
    if (tokens.size() > max_tokens) tokens.resize(max_tokens);
    if (tokens.empty()) throw Error("empty input");
    TokenBag bag;
    bag.token_count = tokens.size();
    double w = 1.0 / static_cast<double>(tokens.size());
    std::map<std::uint32_t, double> counts;
    for (const auto& t : tokens) {
        counts[t.id] += w;
        bag.segment_weights[ToyEmbedderParams::index(kind_at(spans, t.offset))] += w;
    }
    bag.weights.assign(counts.begin(), counts.end());
    return bag;
}

EmbeddingTrace embed_bag(const ToyEmbedderParams& params, const TokenBag& bag) {
    EmbeddingTrace t;
    t.pooled.assign(params.dim, 0.0);
    for (const auto& [id, w] : bag.weights) {
        auto r = params.row(id);
        for (std::size_t j = 0; j < params.dim; ++j) t.pooled[j] += w * r[j];
    }
    for (std::size_t k = 0; k < 2; ++k) {
        if (bag.segment_weights[k] == 0.0) continue;
        const double* s = params.segment_offsets.data() + k * params.dim;
        for (std::size_t j = 0; j < params.dim; ++j) t.pooled[j] += bag.segment_weights[k] * s[j];
    }
    t.pooled_norm = std::sqrt(dot(t.pooled, t.pooled));
    if (!(t.pooled_norm > 0.0) || !std::isfinite(t.pooled_norm)) throw Error("degenerate embedding");
    t.output.values.resize(params.dim);
    for (std::size_t j = 0; j < params.dim; ++j) t.output.values[j] = t.pooled[j] / t.pooled_norm;
    return t;
}

EmbeddingVector toy_embed(const ToyEmbedderParams& params, std::string_view text,
                          std::span<const SegmentSpan> spans) {
    return embed_bag(params, make_token_bag(text, spans, params.vocab_size, params.max_tokens)).output;
}

void ToyGradient::add_row(std::uint32_t id, std::span<const double> g, double weight, std::size_t dim) {
    auto& r = rows[id];
    if (r.empty()) r.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) r[j] += weight * g[j];
}

void ToyGradient::add_segment(std::size_t kind, std::span<const double> g, double weight, std::size_t dim) {
    auto& s = segments[kind];
    if (s.empty()) s.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) s[j] += weight * g[j];
}

void ToyGradient::merge(const ToyGradient& other, double weight) {
    for (const auto& [id, g] : other.rows) add_row(id, g, weight, g.size());
    for (std::size_t k = 0; k < 2; ++k)
        if (!other.segments[k].empty()) add_segment(k, other.segments[k], weight, other.segments[k].size());
}

double ToyGradient::norm() const {
    double s = 0.0;
    for (const auto& [id, g] : rows) s += dot(g, g);
    for (const auto& g : segments) s += dot(g, g);
    return std::sqrt(s);
}

void ToyGradient::apply(ToyEmbedderParams& params, double learning_rate) const {
    for (const auto& [id, g] : rows) {
        auto r = params.row(id);
        for (std::size_t j = 0; j < params.dim; ++j) r[j] -= learning_rate * g[j];
    }
    for (std::size_t k = 0; k < 2; ++k) {
        if (segments[k].empty()) continue;
        double* s = params.segment_offsets.data() + k * params.dim;
        for (std::size_t j = 0; j < params.dim; ++j) s[j] -= learning_rate * segments[k][j];
    }
}

void backprop_embedding(const ToyEmbedderParams& params, const TokenBag& bag, const EmbeddingTrace& trace,
                        std::span<const double> grad_output, ToyGradient& grad) {
    // u = m / |m|  =>  dL/dm = (g - u (u . g)) / |m|
    const auto& u = trace.output.values;
    double ug = dot(u, grad_output);
    std::vector<double> gm(params.dim);
    for (std::size_t j = 0; j < params.dim; ++j) gm[j] = (grad_output[j] - u[j] * ug) / trace.pooled_norm;
    for (const auto& [id, w] : bag.weights) grad.add_row(id, gm, w, params.dim);
    for (std::size_t k = 0; k < 2; ++k)
        if (bag.segment_weights[k] != 0.0) grad.add_segment(k, gm, bag.segment_weights[k], params.dim);
}

EmbeddingVector Embedder::embed(std::string_view text, std::span<const SegmentSpan> spans) const {
    std::vector<std::string> texts{std::string(text)};
    std::vector<std::vector<SegmentSpan>> span_lists;
    if (!spans.empty()) span_lists.emplace_back(spans.begin(), spans.end());
    return embed_batch(texts, span_lists).at(0);
}

std::vector<EmbeddingVector> ToyEmbedder::embed_batch(std::span<const std::string> texts,
                                                      std::span<const std::vector<SegmentSpan>> spans) const {
    if (!spans.empty() && spans.size() != texts.size()) throw Error("span list count does not match texts");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
        out.push_back(toy_embed(*params_, texts[i], spans.empty() ? std::span<const SegmentSpan>{} : spans[i]));
    return out;
}

}  // namespace coret
