#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coret/chunk.hpp"
#include "coret/embedding.hpp"
#include "coret/retriever.hpp"

namespace coret {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Bm25Stats {
    Bm25Params params;
    std::uint32_t vocab_size = kDefaultVocabSize;
    std::vector<std::string> doc_ids;
    std::vector<std::size_t> doc_lengths;
    double avg_doc_len = 0.0;
    std::unordered_map<std::uint32_t, std::size_t> doc_freq;
    // term -> (doc index, term frequency), doc indices ascending
    std::unordered_map<std::uint32_t, std::vector<std::pair<std::size_t, std::size_t>>> postings;

    std::size_t doc_count() const noexcept { return doc_ids.size(); }
    double idf(std::uint32_t term) const;
};

// Statistics over tokenize(rendered_text). Throws Error on an empty set.
Bm25Stats bm25_build(const ChunkSet& chunks, Bm25Params params = {}, std::uint32_t vocab_size = kDefaultVocabSize);
Bm25Stats bm25_build_texts(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           Bm25Params params = {}, std::uint32_t vocab_size = kDefaultVocabSize);

// Scores of every document, in doc order; repeated query terms count again.
std::vector<double> bm25_scores(const Bm25Stats& stats, std::string_view query_text);

// Top k documents (zero-score documents included), ties by chunk_id.
RankedRetrieval bm25_rank(const Bm25Stats& stats, std::string_view query_text, std::size_t k);

// Highest-ranked chunk ids outside `gt_ids`, at most n.
std::vector<std::string> mine_hard_negatives(const Bm25Stats& stats, std::string_view query_text,
                                             const std::vector<std::string>& gt_ids, std::size_t n);

}  // namespace coret
