#include "coret/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "coret/error.hpp"

namespace coret {
namespace {

using nlohmann::json;

constexpr std::size_t kEmbedBatch = 64;

void store(IndexEntry& entry, const EmbeddingVector& v) {
    entry.vector.assign(v.values.begin(), v.values.end());
}

}  // namespace

std::vector<std::string> RankedRetrieval::ids() const {
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) out.push_back(r.chunk_id);
    return out;
}

bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
}

Index build_index(const ChunkSet& chunks, const ContextMap* contexts, const Embedder& embedder) {
    Index index;
    index.repo_id = chunks.repo_id;
    index.dim = embedder.dim();
    index.fingerprint = embedder.fingerprint();
    index.include_path = std::all_of(chunks.chunks.begin(), chunks.chunks.end(), [](const Chunk& c) {
        return c.rendered_text.rfind(c.file_path + "\n", 0) == 0;
    });

    std::vector<std::string> texts;
    std::vector<std::vector<SegmentSpan>> spans;
    for (const Chunk& c : chunks.chunks) {
        if (contexts) {
            auto it = contexts->find(c.chunk_id);
            if (it == contexts->end()) throw Error("no context for chunk " + c.chunk_id);
            texts.push_back(it->second.context_text);
            spans.push_back(it->second.segment_spans);
        } else {
            texts.push_back(c.rendered_text);
        }
    }

    for (std::size_t start = 0; start < texts.size(); start += kEmbedBatch) {
        std::size_t end = std::min(texts.size(), start + kEmbedBatch);
        std::span<const std::string> batch(texts.data() + start, end - start);
        std::span<const std::vector<SegmentSpan>> batch_spans;
        if (contexts) batch_spans = {spans.data() + start, end - start};
        std::vector<EmbeddingVector> vectors;
        try {
            vectors = embedder.embed_batch(batch, batch_spans);
        } catch (const RetryableError&) {
            throw;
        } catch (const ProtocolError&) {
            throw;
        } catch (const Error&) {
            // Fall back to one text at a time to isolate the failure.
            vectors.clear();
        }
        for (std::size_t i = start; i < end; ++i) {
            const std::string& id = chunks.chunks[i].chunk_id;
            IndexEntry entry{id, {}};
            if (!vectors.empty()) {
                store(entry, vectors[i - start]);
            } else {
                try {
                    std::span<const SegmentSpan> s;
                    if (contexts) s = spans[i];
                    store(entry, embedder.embed(texts[i], s));
                } catch (const RetryableError&) {
                    throw;
                } catch (const ProtocolError&) {
                    throw;
                } catch (const Error& e) {
                    index.excluded.push_back({id, e.what()});
                    continue;
                }
            }
            index.entries.push_back(std::move(entry));
        }
    }
    return index;
}

RankedRetrieval top_k(const Index& index, const EmbeddingVector& query, std::size_t k) {
    if (k == 0) throw Error("k must be positive");
    if (query.dim() != index.dim) throw Error("dimension mismatch");
    double qn = query.norm();
    if (!(qn > 0.0) || !std::isfinite(qn)) throw Error("zero-norm query");
    RankedRetrieval out;
    out.ranked.reserve(index.entries.size());
    for (const auto& e : index.entries) {
        double d = 0.0, en = 0.0;
        for (std::size_t j = 0; j < index.dim; ++j) {
            double x = e.vector[j];
            d += query.values[j] * x;
            en += x * x;
        }
        double s = en > 0.0 ? d / (qn * std::sqrt(en)) : 0.0;
        out.ranked.push_back({e.chunk_id, s});
    }
    k = std::min(k, out.ranked.size());
    std::partial_sort(out.ranked.begin(), out.ranked.begin() + static_cast<std::ptrdiff_t>(k), out.ranked.end(),
                      ranks_before);
    out.ranked.resize(k);
    return out;
}

double score(std::string_view query_text, const Chunk& chunk, const Embedder& embedder) {
    return cosine(embedder.embed(query_text), embedder.embed(chunk.rendered_text));
}

void write_index(const Index& index, std::ostream& out) {
    json header = {{"repo_id", index.repo_id},
                   {"dim", index.dim},
                   {"fingerprint", index.fingerprint},
                   {"include_path", index.include_path},
                   {"count", index.entries.size()}};
    out << header.dump() << '\n';
    for (const auto& e : index.entries) out << json{{"chunk_id", e.chunk_id}, {"vector", e.vector}}.dump() << '\n';
}

Index read_index(std::istream& in) {
    Index index;
    std::string line;
    if (!std::getline(in, line)) throw DataError("index file is empty");
    std::size_t count = 0;
    try {
        auto h = json::parse(line);
        index.repo_id = h.at("repo_id").get<std::string>();
        index.dim = h.at("dim").get<std::size_t>();
        index.fingerprint = h.at("fingerprint").get<std::string>();
        index.include_path = h.at("include_path").get<bool>();
        count = h.at("count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad index header: ") + e.what());
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        IndexEntry e;
        try {
            auto r = json::parse(line);
            e.chunk_id = r.at("chunk_id").get<std::string>();
            e.vector = r.at("vector").get<std::vector<float>>();
        } catch (const json::exception& ex) {
            throw DataError("bad index record at line " + std::to_string(line_no) + ": " + ex.what());
        }
        if (e.vector.size() != index.dim)
            throw DataError("index record at line " + std::to_string(line_no) + " has wrong dimension");
        index.entries.push_back(std::move(e));
    }
    if (index.entries.size() != count)
        throw DataError("index header declares " + std::to_string(count) + " entries, found " +
                        std::to_string(index.entries.size()));
    return index;
}

void save_index(const Index& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_index(index, out);
}

Index load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return read_index(in);
}

}  // namespace coret
