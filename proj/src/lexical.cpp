#include "coret/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coret/error.hpp"

namespace coret {

double Bm25Stats::idf(std::uint32_t term) const {
    auto it = doc_freq.find(term);
    double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    double n = static_cast<double>(doc_count());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

Bm25Stats bm25_build_texts(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           Bm25Params params, std::uint32_t vocab_size) {
    if (ids.empty()) throw Error("cannot build BM25 statistics over an empty chunk set");
    if (ids.size() != texts.size()) throw Error("id and text counts differ");
    Bm25Stats stats;
    stats.params = params;
    stats.vocab_size = vocab_size;
    stats.doc_ids = ids;
    std::size_t total = 0;
    for (std::size_t d = 0; d < texts.size(); ++d) {
        std::map<std::uint32_t, std::size_t> tf;
        auto tokens = tokenize(texts[d], vocab_size);
        for (auto t : tokens) ++tf[t];
        stats.doc_lengths.push_back(tokens.size());
        total += tokens.size();
        for (const auto& [term, count] : tf) {
            ++stats.doc_freq[term];
            stats.postings[term].emplace_back(d, count);
        }
    }
    stats.avg_doc_len = static_cast<double>(total) / static_cast<double>(ids.size());
    return stats;
}

Bm25Stats bm25_build(const ChunkSet& chunks, Bm25Params params, std::uint32_t vocab_size) {
    std::vector<std::string> ids, texts;
    for (const Chunk& c : chunks.chunks) {
        ids.push_back(c.chunk_id);
        texts.push_back(c.rendered_text);
    }
    return bm25_build_texts(ids, texts, params, vocab_size);
}

std::vector<double> bm25_scores(const Bm25Stats& stats, std::string_view query_text) {
    std::vector<double> scores(stats.doc_count(), 0.0);
    // All-empty corpora have avg_doc_len 0; length normalization is moot there.
    double avg = stats.avg_doc_len > 0.0 ? stats.avg_doc_len : 1.0;
    const double k1 = stats.params.k1, b = stats.params.b;
    for (auto term : tokenize(query_text, stats.vocab_size)) {
        auto it = stats.postings.find(term);
        if (it == stats.postings.end()) continue;
        double idf = stats.idf(term);
        for (const auto& [doc, count] : it->second) {
            double tf = static_cast<double>(count);
            double norm = k1 * (1.0 - b + b * static_cast<double>(stats.doc_lengths[doc]) / avg);
            scores[doc] += idf * tf * (k1 + 1.0) / (tf + norm);
        }
    }
    return scores;
}

RankedRetrieval bm25_rank(const Bm25Stats& stats, std::string_view query_text, std::size_t k) {
    auto scores = bm25_scores(stats, query_text);
    RankedRetrieval out;
    out.ranked.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) out.ranked.push_back({stats.doc_ids[d], scores[d]});
    k = std::min(k, out.ranked.size());
    std::partial_sort(out.ranked.begin(), out.ranked.begin() + static_cast<std::ptrdiff_t>(k), out.ranked.end(),
                      ranks_before);
    out.ranked.resize(k);
    return out;
}

std::vector<std::string> mine_hard_negatives(const Bm25Stats& stats, std::string_view query_text,
                                             const std::vector<std::string>& gt_ids, std::size_t n) {
    if (n == 0) throw Error("n must be positive");
    std::set<std::string, std::less<>> gt(gt_ids.begin(), gt_ids.end());
    std::vector<std::string> out;
    for (const auto& r : bm25_rank(stats, query_text, stats.doc_count()).ranked) {
        if (out.size() == n) break;
        if (!gt.contains(r.chunk_id)) out.push_back(r.chunk_id);
    }
    return out;
}

}  // namespace coret
