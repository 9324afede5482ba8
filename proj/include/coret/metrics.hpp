#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "coret/chunk.hpp"
#include "coret/retriever.hpp"

namespace coret {

enum class Metric { Recall, Mrr, PerfectRecall };
enum class Level { Chunk, File };

std::string_view to_string(Metric m);
std::string_view to_string(Level l);
Metric metric_from_string(std::string_view text);
Level level_from_string(std::string_view text);

// All metrics look at ids only. Each throws Error on empty gt_ids; the
// k-parameterized ones also on k == 0.
double recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids, std::size_t k);
double mrr(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids);
double perfect_recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids,
                           std::size_t k);

// Rank-ordered file paths of the ranked chunks, first occurrence kept.
std::vector<std::string> file_ranking(const std::vector<std::string>& ranked, const ChunkSet& chunks);
std::vector<std::string> gt_files(const std::vector<std::string>& gt_ids, const ChunkSet& chunks);

// Chunk metric applied to the deduplicated files of the first k chunks and
// the GT files. For Mrr, k bounds the ranking prefix considered.
double file_level(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids,
                  const ChunkSet& chunks, std::size_t k, Metric metric);

struct EvalInstance {
    std::string instance_id;
    std::vector<std::string> gt_ids;
    const ChunkSet* chunks = nullptr;  // required for file level
};

struct MetricRow {
    std::string instance_id;  // "mean" on aggregate rows
    Level level = Level::Chunk;
    Metric metric = Metric::Recall;
    std::size_t k = 0;  // 0 for MRR
    double value = 0.0;
};

struct EvalOptions {
    std::vector<std::size_t> ks{5, 20};
    std::vector<Metric> metrics{Metric::Recall, Metric::Mrr, Metric::PerfectRecall};
    std::vector<Level> levels{Level::Chunk, Level::File};
};

struct EvalResult {
    std::size_t instance_count = 0;
    std::vector<MetricRow> rows;
    std::vector<MetricRow> aggregates;

    // Throws Error when the combination was not evaluated.
    double mean(Level level, Metric metric, std::size_t k = 0) const;
};

// Throws Error naming the first instance without a ranking.
EvalResult evaluate(const std::vector<EvalInstance>& instances,
                    const std::map<std::string, RankedRetrieval, std::less<>>& rankings, const EvalOptions& options);

// instance_id,level,metric,k,value; per-instance rows then aggregate rows.
void write_eval_csv(const EvalResult& result, std::ostream& out);

}  // namespace coret
