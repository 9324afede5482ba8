#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coret/callgraph.hpp"
#include "coret/chunk.hpp"
#include "coret/embedding.hpp"

namespace coret {

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;

    friend bool operator==(const ScoredChunk&, const ScoredChunk&) = default;
};

// Ordered by score descending, ties by chunk_id ascending.
struct RankedRetrieval {
    std::string query_id;
    std::vector<ScoredChunk> ranked;

    std::vector<std::string> ids() const;
};

// Strict ranking order used by every scorer.
bool ranks_before(const ScoredChunk& a, const ScoredChunk& b);

struct IndexEntry {
    std::string chunk_id;
    std::vector<float> vector;  // stored at 32-bit precision
};

struct ExcludedChunk {
    std::string chunk_id;
    std::string reason;
};

struct Index {
    std::string repo_id;
    std::size_t dim = 0;
    std::string fingerprint;
    bool include_path = true;
    std::vector<IndexEntry> entries;  // chunk order
    std::vector<ExcludedChunk> excluded;  // build-time only, not serialized
};

using ContextMap = std::map<std::string, ContextualizedChunk, std::less<>>;

// Embeds context_text when `contexts` is given (every chunk must have one),
// rendered_text otherwise. Chunks whose embedding fails are listed in
// Index::excluded; provider transport and protocol errors propagate.
Index build_index(const ChunkSet& chunks, const ContextMap* contexts, const Embedder& embedder);

// Exhaustive cosine scan in 64-bit. Throws Error on dim mismatch or k == 0.
RankedRetrieval top_k(const Index& index, const EmbeddingVector& query, std::size_t k);

double score(std::string_view query_text, const Chunk& chunk, const Embedder& embedder);

// Header line {repo_id, dim, fingerprint, include_path, count}, then one
// {chunk_id, vector} record per line.
void write_index(const Index& index, std::ostream& out);
Index read_index(std::istream& in);
void save_index(const Index& index, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

}  // namespace coret
