#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coret/chunk.hpp"

namespace coret {

enum class SegmentKind { Base, Neighbor };

// Half-open character range [begin, end) of a context text.
struct SegmentSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    SegmentKind kind = SegmentKind::Base;

    friend bool operator==(const SegmentSpan&, const SegmentSpan&) = default;
};

enum class Direction { Downstream, Upstream, Both };

Direction direction_from_string(std::string_view text);

// Separator placed before every neighbor appended to a context.
inline constexpr std::string_view kDownToken = "[DOWN]";

struct CallEdge {
    std::string caller;
    std::string callee;
    // Position of the first call site inside the caller, used for ordering.
    int site_line = 0;
    int site_col = 0;

    friend bool operator==(const CallEdge&, const CallEdge&) = default;
};

struct CallGraphDiagnostics {
    std::size_t call_sites = 0;
    std::size_t resolved_sites = 0;
    std::size_t unresolved_sites = 0;
};

class CallGraph {
public:
    CallGraph() = default;
    explicit CallGraph(std::vector<std::string> node_ids);

    // Ignores self-loops, unknown endpoints and duplicates; returns whether
    // the edge was added.
    bool add_edge(CallEdge edge);

    const std::vector<std::string>& node_ids() const noexcept { return nodes_; }
    bool has_node(std::string_view id) const;
    bool has_edge(std::string_view caller, std::string_view callee) const;
    // Edges ordered by caller node order, then call-site position, then callee.
    std::vector<CallEdge> edges() const;
    std::size_t edge_count() const noexcept { return edge_keys_.size(); }
    std::size_t out_degree(std::string_view id) const;

    CallGraphDiagnostics diagnostics;

private:
    friend std::vector<std::string> neighbors(const CallGraph&, std::string_view, Direction);

    std::vector<std::string> nodes_;
    std::map<std::string, std::size_t, std::less<>> node_index_;
    std::set<std::pair<std::string, std::string>, std::less<>> edge_keys_;
    std::map<std::string, std::vector<CallEdge>, std::less<>> out_;
    std::map<std::string, std::vector<std::string>, std::less<>> in_;
};

CallGraph build_call_graph(const ChunkSet& chunks);

// Downstream: callees by first call-site position, then id. Upstream:
// callers by id. Both: downstream followed by the remaining upstream ids.
// Throws Error for an unknown chunk id.
std::vector<std::string> neighbors(const CallGraph& graph, std::string_view chunk_id,
                                   Direction direction = Direction::Downstream);

struct ContextualizedChunk {
    std::string base_chunk_id;
    std::string context_text;
    std::vector<SegmentSpan> segment_spans;
    std::vector<std::string> included_neighbor_ids;
};

inline constexpr std::size_t kDefaultContextBudget = 4096;

// Base rendered text, then "[DOWN]" + neighbor text (without its path line)
// for each neighbor that still fits in `budget` characters; stops at the
// first neighbor that does not fit. Throws Error("budget too small") when the
// base text alone exceeds the budget.
ContextualizedChunk assemble_context(const Chunk& chunk, const CallGraph& graph, const ChunkSet& chunks,
                                     std::size_t budget = kDefaultContextBudget,
                                     Direction direction = Direction::Downstream);

// Graph export: one {"caller","callee"} object per line in edges() order.
void write_graph(const CallGraph& graph, std::ostream& out);
// Nodes are taken from `chunks`; file order defines call-site order.
CallGraph read_graph(std::istream& in, const ChunkSet& chunks);
void save_graph(const CallGraph& graph, const std::filesystem::path& path);
CallGraph load_graph(const std::filesystem::path& path, const ChunkSet& chunks);

}  // namespace coret
