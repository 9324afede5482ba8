#include "coret/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>

#include "coret/error.hpp"

namespace coret {
namespace {

void require_gt(const std::vector<std::string>& gt_ids) {
    if (gt_ids.empty()) throw Error("ground truth set is empty");
}

void require_k(std::size_t k) {
    if (k == 0) throw Error("k must be positive");
}

std::size_t hits_in_prefix(const std::vector<std::string>& ranked, const std::set<std::string, std::less<>>& gt,
                           std::size_t k) {
    std::size_t hits = 0;
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
        if (gt.contains(ranked[i]) && seen.insert(ranked[i]).second) ++hits;
    return hits;
}

const std::string& file_of(const std::string& id, const ChunkSet& chunks) {
    const Chunk* c = chunks.find(id);
    if (!c) throw Error("cannot resolve chunk id " + id);
    return c->file_path;
}

}  // namespace

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::Recall: return "recall";
    case Metric::Mrr: return "mrr";
    case Metric::PerfectRecall: return "perfect";
    }
    return "?";
}

std::string_view to_string(Level l) { return l == Level::Chunk ? "chunk" : "file"; }

Metric metric_from_string(std::string_view text) {
    if (text == "recall") return Metric::Recall;
    if (text == "mrr") return Metric::Mrr;
    if (text == "perfect") return Metric::PerfectRecall;
    throw Error("unknown metric: " + std::string(text));
}

Level level_from_string(std::string_view text) {
    if (text == "chunk") return Level::Chunk;
    if (text == "file") return Level::File;
    throw Error("unknown level: " + std::string(text));
}

double recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids, std::size_t k) {
    require_gt(gt_ids);
    require_k(k);
    std::set<std::string, std::less<>> gt(gt_ids.begin(), gt_ids.end());
    return static_cast<double>(hits_in_prefix(ranked, gt, k)) / static_cast<double>(gt.size());
}

double mrr(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids) {
    require_gt(gt_ids);
    std::set<std::string, std::less<>> gt(gt_ids.begin(), gt_ids.end());
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (gt.contains(ranked[i])) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double perfect_recall_at_k(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids,
                           std::size_t k) {
    require_gt(gt_ids);
    require_k(k);
    std::set<std::string, std::less<>> gt(gt_ids.begin(), gt_ids.end());
    return hits_in_prefix(ranked, gt, k) == gt.size() ? 1.0 : 0.0;
}

std::vector<std::string> file_ranking(const std::vector<std::string>& ranked, const ChunkSet& chunks) {
    std::vector<std::string> files;
    std::set<std::string, std::less<>> seen;
    for (const auto& id : ranked) {
        const std::string& f = file_of(id, chunks);
        if (seen.insert(f).second) files.push_back(f);
    }
    return files;
}

std::vector<std::string> gt_files(const std::vector<std::string>& gt_ids, const ChunkSet& chunks) {
    std::set<std::string> files;
    for (const auto& id : gt_ids) files.insert(file_of(id, chunks));
    return {files.begin(), files.end()};
}

double file_level(const std::vector<std::string>& ranked, const std::vector<std::string>& gt_ids,
                  const ChunkSet& chunks, std::size_t k, Metric metric) {
    require_gt(gt_ids);
    require_k(k);
    std::vector<std::string> prefix(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size())));
    auto files = file_ranking(prefix, chunks);
    auto gt = gt_files(gt_ids, chunks);
    switch (metric) {
    case Metric::Recall: return recall_at_k(files, gt, files.size() + 1);
    case Metric::Mrr: return mrr(files, gt);
    case Metric::PerfectRecall: return perfect_recall_at_k(files, gt, files.size() + 1);
    }
    return 0.0;
}

double EvalResult::mean(Level level, Metric metric, std::size_t k) const {
    if (metric == Metric::Mrr) k = 0;
    for (const auto& r : aggregates)
        if (r.level == level && r.metric == metric && r.k == k) return r.value;
    throw Error("metric not evaluated: " + std::string(to_string(level)) + " " + std::string(to_string(metric)) +
                "@" + std::to_string(k));
}

EvalResult evaluate(const std::vector<EvalInstance>& instances,
                    const std::map<std::string, RankedRetrieval, std::less<>>& rankings, const EvalOptions& options) {
    EvalResult result;
    result.instance_count = instances.size();
    for (std::size_t k : options.ks) require_k(k);
    struct Key {
        Level level;
        Metric metric;
        std::size_t k;
    };
    std::vector<Key> keys;
    for (Level level : options.levels)
        for (Metric metric : options.metrics) {
            if (metric == Metric::Mrr)
                keys.push_back({level, metric, 0});
            else
                for (std::size_t k : options.ks) keys.push_back({level, metric, k});
        }
    std::vector<double> sums(keys.size(), 0.0);

    for (const auto& inst : instances) {
        auto it = rankings.find(inst.instance_id);
        if (it == rankings.end()) throw Error("no ranking for instance " + inst.instance_id);
        auto ids = it->second.ids();
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const Key& key = keys[i];
            double v = 0.0;
            if (key.level == Level::File) {
                if (!inst.chunks) throw Error("file-level metrics need chunks for instance " + inst.instance_id);
                v = file_level(ids, inst.gt_ids, *inst.chunks, key.k == 0 ? std::max<std::size_t>(1, ids.size()) : key.k,
                               key.metric);
            } else if (key.metric == Metric::Recall) {
                v = recall_at_k(ids, inst.gt_ids, key.k);
            } else if (key.metric == Metric::Mrr) {
                v = mrr(ids, inst.gt_ids);
            } else {
                v = perfect_recall_at_k(ids, inst.gt_ids, key.k);
            }
            sums[i] += v;
            result.rows.push_back({inst.instance_id, key.level, key.metric, key.k, v});
        }
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        double mean = instances.empty() ? 0.0 : sums[i] / static_cast<double>(instances.size());
        result.aggregates.push_back({"mean", keys[i].level, keys[i].metric, keys[i].k, mean});
    }
    return result;
}

void write_eval_csv(const EvalResult& result, std::ostream& out) {
    out << "instance_id,level,metric,k,value\n";
    auto row = [&](const MetricRow& r) {
        out << r.instance_id << ',' << to_string(r.level) << ',' << to_string(r.metric) << ',';
        if (r.k) out << r.k;
        out << ',' << std::setprecision(10) << r.value << '\n';
    };
    for (const auto& r : result.rows) row(r);
    for (const auto& r : result.aggregates) row(r);
}

}  // namespace coret
