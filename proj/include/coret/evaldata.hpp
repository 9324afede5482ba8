#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "coret/callgraph.hpp"
#include "coret/chunk.hpp"
#include "coret/chunker.hpp"

namespace coret {

struct RawInstance {
    std::string instance_id;
    std::string query_text;
    std::filesystem::path repo_root;
    std::string patch_text;
};

// Edits to one file in pre-image line numbers.
struct EditSpan {
    std::string file_path;  // pre-image path (new path for created files)
    std::set<int> changed_lines;
    // Pre-image line after which lines were inserted (0 = top of file).
    std::set<int> insertion_anchors;
    bool addition_only = false;  // file created by the patch
    bool deleted = false;
};

// Throws DataError with the offending patch line on malformed input.
std::vector<EditSpan> parse_patch(std::string_view patch_text);

struct GtMapping {
    std::vector<std::string> gt_ids;  // chunk order
    std::vector<std::string> warnings;
};

// Each changed line and insertion anchor selects the innermost (shortest)
// chunk whose span contains it.
GtMapping map_to_gt_chunks(const std::vector<EditSpan>& spans, const ChunkSet& chunks);

struct TrainingInstance {
    std::string instance_id;
    std::string query_text;
    std::shared_ptr<const ChunkSet> chunks;
    std::shared_ptr<const CallGraph> graph;  // may be null
    std::vector<std::string> gt_ids;
};

struct InstanceIssue {
    std::string instance_id;
    std::string reason;
};

struct BuildReport {
    std::vector<InstanceIssue> discarded;  // empty ground truth
    std::vector<InstanceIssue> failed;     // unreadable repo, bad patch, ...
    std::vector<std::string> warnings;
};

// Chunks each distinct repo once (and builds its call graph), maps patches
// and drops instances with empty ground truth. Output keeps input order.
std::vector<TrainingInstance> build_instances(const std::vector<RawInstance>& raw, const ChunkerConfig& cfg,
                                              BuildReport* report = nullptr);

// Instance file: one {instance_id, query, repo_path, patch} object per line;
// relative repo paths resolve against `base_dir`.
std::vector<RawInstance> read_raw_instances(std::istream& in, const std::filesystem::path& base_dir = {});
std::vector<RawInstance> load_raw_instances(const std::filesystem::path& path);
void write_raw_instances(const std::vector<RawInstance>& raw, std::ostream& out);

// Prepared directory: repos/<repo_id>.chunks.jsonl (+ imports sidecar),
// repos/<repo_id>.graph.jsonl and instances.jsonl with
// {instance_id, query, repo_id, gt_ids}.
void save_prepared(const std::vector<TrainingInstance>& instances, const std::filesystem::path& dir);
std::vector<TrainingInstance> load_prepared(const std::filesystem::path& dir);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for fewer than 2 values
    std::size_t n = 0;
};

MeanSd mean_sd(const std::vector<double>& values);

struct DatasetStats {
    std::size_t instance_count = 0;
    MeanSd files_per_repo;
    MeanSd chunks_per_repo;
    MeanSd gt_chunks;
    MeanSd chunks_per_file;
    MeanSd files_per_gt;
    MeanSd calls_per_chunk;
    // Unset when no instance qualifies (overlaps need >= 2 GT chunks).
    std::optional<double> gt_file_overlap;
    std::optional<double> gt_file_in_query;
    std::optional<double> gt_call_overlap;
};

// Instances without a graph get one built on the fly.
DatasetStats dataset_stats(const std::vector<TrainingInstance>& instances);
std::string stats_to_json(const DatasetStats& stats);

}  // namespace coret
