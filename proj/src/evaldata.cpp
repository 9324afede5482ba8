#include "coret/evaldata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coret/error.hpp"

namespace coret {
namespace {

using nlohmann::json;

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::string strip_diff_path(std::string_view p) {
    if (auto tab = p.find('\t'); tab != std::string_view::npos) p = p.substr(0, tab);
    while (!p.empty() && (p.back() == '\r' || p.back() == ' ')) p.remove_suffix(1);
    if (p.size() >= 2 && p.front() == '"' && p.back() == '"') p = p.substr(1, p.size() - 2);
    if (starts_with(p, "a/") || starts_with(p, "b/")) p.remove_prefix(2);
    return std::string(p);
}

bool parse_int(std::string_view s, int& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

// "-a[,b]" or "+c[,d]"
bool parse_range(std::string_view s, char sign, int& start, int& count) {
    if (s.empty() || s[0] != sign) return false;
    s.remove_prefix(1);
    count = 1;
    if (auto comma = s.find(','); comma != std::string_view::npos) {
        if (!parse_int(s.substr(comma + 1), count)) return false;
        s = s.substr(0, comma);
    }
    return parse_int(s, start) && start >= 0 && count >= 0;
}

struct FileState {
    std::string old_path, new_path;
    EditSpan span;
    bool seen_old_header = false;
    bool has_content = false;
};

}  // namespace

std::vector<EditSpan> parse_patch(std::string_view text) {
    std::vector<EditSpan> out;
    std::optional<FileState> cur;
    int old_rem = 0, new_rem = 0, old_line = 0, hunk_start = 0;

    auto finish = [&] {
        if (!cur) return;
        const std::string& path = cur->span.addition_only ? cur->new_path : cur->old_path;
        if (!path.empty()) {
            cur->span.file_path = normalize_path(path);
            out.push_back(std::move(cur->span));
        }
        cur.reset();
    };
    auto fail = [](int line, const std::string& msg) -> DataError {
        return DataError("malformed patch at line " + std::to_string(line) + ": " + msg);
    };

    int ln = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++ln;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (old_rem > 0 || new_rem > 0) {
            char c = line.empty() ? ' ' : line[0];
            if (c == ' ') {
                ++old_line;
                --old_rem;
                --new_rem;
            } else if (c == '-') {
                cur->span.changed_lines.insert(old_line);
                ++old_line;
                --old_rem;
            } else if (c == '+') {
                cur->span.insertion_anchors.insert(old_line - 1);
                --new_rem;
            } else if (c == '\\') {
                continue;
            } else {
                throw fail(ln, "hunk starting at line " + std::to_string(hunk_start) + " ends early");
            }
            if (old_rem < 0 || new_rem < 0)
                throw fail(ln, "hunk starting at line " + std::to_string(hunk_start) + " has more lines than declared");
            continue;
        }

        if (starts_with(line, "diff --git ")) {
            finish();
            cur.emplace();
            std::string_view rest = line.substr(11);
            auto split = rest.find(" b/");
            if (split != std::string_view::npos) {
                cur->old_path = strip_diff_path(rest.substr(0, split));
                cur->new_path = strip_diff_path(rest.substr(split + 1));
            }
        } else if (starts_with(line, "rename from ") && cur) {
            cur->old_path = strip_diff_path(line.substr(12));
        } else if (starts_with(line, "rename to ") && cur) {
            cur->new_path = strip_diff_path(line.substr(10));
        } else if (starts_with(line, "new file mode") && cur) {
            cur->span.addition_only = true;
        } else if (starts_with(line, "deleted file mode") && cur) {
            cur->span.deleted = true;
        } else if (starts_with(line, "--- ")) {
            if (!cur || cur->seen_old_header || cur->has_content) {
                finish();
                cur.emplace();
            }
            cur->seen_old_header = true;
            std::string p = strip_diff_path(line.substr(4));
            if (p == "/dev/null")
                cur->span.addition_only = true;
            else
                cur->old_path = p;
        } else if (starts_with(line, "+++ ")) {
            if (!cur || !cur->seen_old_header) throw fail(ln, "'+++' without '---'");
            std::string p = strip_diff_path(line.substr(4));
            if (p == "/dev/null")
                cur->span.deleted = true;
            else
                cur->new_path = p;
        } else if (starts_with(line, "@@")) {
            if (!cur) throw fail(ln, "hunk outside a file section");
            auto end = line.find("@@", 2);
            if (end == std::string_view::npos) throw fail(ln, "bad hunk header");
            std::string_view ranges = line.substr(2, end - 2);
            std::istringstream parts{std::string(ranges)};
            std::string a, b;
            parts >> a >> b;
            int os = 0, oc = 0, ns = 0, nc = 0;
            if (!parse_range(a, '-', os, oc) || !parse_range(b, '+', ns, nc)) throw fail(ln, "bad hunk header");
            old_rem = oc;
            new_rem = nc;
            // An empty old range names the line after which text is inserted.
            old_line = oc == 0 ? os + 1 : os;
            hunk_start = ln;
            cur->has_content = true;
        }
        // Anything else (index lines, mode lines, commit headers) is ignored.
    }
    if (old_rem > 0 || new_rem > 0)
        throw fail(ln, "hunk starting at line " + std::to_string(hunk_start) + " is truncated");
    finish();
    return out;
}

GtMapping map_to_gt_chunks(const std::vector<EditSpan>& spans, const ChunkSet& chunks) {
    std::map<std::string_view, std::vector<std::size_t>> by_file;
    for (std::size_t i = 0; i < chunks.chunks.size(); ++i) by_file[chunks.chunks[i].file_path].push_back(i);

    GtMapping out;
    std::set<std::size_t> hit;
    for (const auto& span : spans) {
        if (span.addition_only) continue;
        auto it = by_file.find(span.file_path);
        if (it == by_file.end()) {
            out.warnings.push_back("patch touches " + span.file_path + ", which has no chunks");
            continue;
        }
        auto mark = [&](int line) {
            int best = -1;
            std::vector<std::size_t> winners;
            for (std::size_t idx : it->second) {
                const LineSpan& ls = chunks.chunks[idx].line_span;
                if (!ls.contains(line)) continue;
                int len = ls.length();
                if (best < 0 || len < best) {
                    best = len;
                    winners.clear();
                }
                if (len == best) winners.push_back(idx);
            }
            hit.insert(winners.begin(), winners.end());
        };
        for (int line : span.changed_lines) mark(line);
        for (int line : span.insertion_anchors) mark(line);
    }
    for (std::size_t idx : hit) out.gt_ids.push_back(chunks.chunks[idx].chunk_id);
    return out;
}

std::vector<TrainingInstance> build_instances(const std::vector<RawInstance>& raw, const ChunkerConfig& cfg,
                                              BuildReport* report) {
    BuildReport local;
    BuildReport& rep = report ? *report : local;

    struct Repo {
        std::shared_ptr<const ChunkSet> chunks;
        std::shared_ptr<const CallGraph> graph;
        std::string error;
    };
    std::map<std::string, Repo> repos;
    std::map<std::string, int> id_uses;

    std::vector<TrainingInstance> out;
    for (const auto& r : raw) {
        if (r.query_text.empty()) {
            rep.failed.push_back({r.instance_id, "empty query"});
            continue;
        }
        std::string key = std::filesystem::weakly_canonical(r.repo_root).string();
        auto it = repos.find(key);
        if (it == repos.end()) {
            Repo repo;
            std::string repo_id = r.repo_root.filename().string();
            if (repo_id.empty()) repo_id = r.repo_root.parent_path().filename().string();
            if (int n = ++id_uses[repo_id]; n > 1) repo_id += "-" + std::to_string(n);
            try {
                auto set = std::make_shared<ChunkSet>(chunk_repository(r.repo_root, cfg, repo_id));
                repo.graph = std::make_shared<CallGraph>(build_call_graph(*set));
                repo.chunks = std::move(set);
            } catch (const Error& e) {
                repo.error = e.what();
            }
            it = repos.emplace(key, std::move(repo)).first;
        }
        const Repo& repo = it->second;
        if (!repo.chunks) {
            rep.failed.push_back({r.instance_id, repo.error});
            continue;
        }
        std::vector<EditSpan> spans;
        try {
            spans = parse_patch(r.patch_text);
        } catch (const DataError& e) {
            rep.failed.push_back({r.instance_id, e.what()});
            continue;
        }
        auto mapping = map_to_gt_chunks(spans, *repo.chunks);
        for (auto& w : mapping.warnings) rep.warnings.push_back(r.instance_id + ": " + w);
        if (mapping.gt_ids.empty()) {
            rep.discarded.push_back({r.instance_id, "no edited chunk"});
            continue;
        }
        out.push_back({r.instance_id, r.query_text, repo.chunks, repo.graph, std::move(mapping.gt_ids)});
    }
    return out;
}

std::vector<RawInstance> read_raw_instances(std::istream& in, const std::filesystem::path& base_dir) {
    std::vector<RawInstance> out;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            RawInstance r;
            r.instance_id = j.at("instance_id").get<std::string>();
            r.query_text = j.at("query").get<std::string>();
            std::filesystem::path p = j.at("repo_path").get<std::string>();
            r.repo_root = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            r.patch_text = j.at("patch").get<std::string>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError("bad instance record at line " + std::to_string(ln) + ": " + e.what());
        }
    }
    return out;
}

std::vector<RawInstance> load_raw_instances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    return read_raw_instances(in, path.parent_path());
}

void write_raw_instances(const std::vector<RawInstance>& raw, std::ostream& out) {
    for (const auto& r : raw)
        out << json{{"instance_id", r.instance_id},
                    {"query", r.query_text},
                    {"repo_path", r.repo_root.generic_string()},
                    {"patch", r.patch_text}}
                   .dump()
            << '\n';
}

void save_prepared(const std::vector<TrainingInstance>& instances, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "repos");
    std::set<const ChunkSet*> written;
    std::ofstream idx(dir / "instances.jsonl");
    if (!idx) throw Error("cannot write " + (dir / "instances.jsonl").string());
    for (const auto& inst : instances) {
        if (written.insert(inst.chunks.get()).second) {
            save_chunk_set(*inst.chunks, dir / "repos" / (inst.chunks->repo_id + ".chunks.jsonl"));
            CallGraph graph = inst.graph ? *inst.graph : build_call_graph(*inst.chunks);
            save_graph(graph, dir / "repos" / (inst.chunks->repo_id + ".graph.jsonl"));
        }
        idx << json{{"instance_id", inst.instance_id},
                    {"query", inst.query_text},
                    {"repo_id", inst.chunks->repo_id},
                    {"gt_ids", inst.gt_ids}}
                   .dump()
            << '\n';
    }
}

std::vector<TrainingInstance> load_prepared(const std::filesystem::path& dir) {
    std::ifstream idx(dir / "instances.jsonl");
    if (!idx) throw Error("cannot read " + (dir / "instances.jsonl").string());
    std::map<std::string, std::pair<std::shared_ptr<const ChunkSet>, std::shared_ptr<const CallGraph>>> repos;
    std::vector<TrainingInstance> out;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(idx, line)) {
        ++ln;
        if (line.empty()) continue;
        TrainingInstance inst;
        std::string repo_id;
        try {
            auto j = json::parse(line);
            inst.instance_id = j.at("instance_id").get<std::string>();
            inst.query_text = j.at("query").get<std::string>();
            repo_id = j.at("repo_id").get<std::string>();
            inst.gt_ids = j.at("gt_ids").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw DataError("bad prepared instance at line " + std::to_string(ln) + ": " + e.what());
        }
        auto it = repos.find(repo_id);
        if (it == repos.end()) {
            auto set = std::make_shared<ChunkSet>(load_chunk_set(dir / "repos" / (repo_id + ".chunks.jsonl"), repo_id));
            auto graph = std::make_shared<CallGraph>(load_graph(dir / "repos" / (repo_id + ".graph.jsonl"), *set));
            it = repos.emplace(repo_id, std::make_pair(std::move(set), std::move(graph))).first;
        }
        inst.chunks = it->second.first;
        inst.graph = it->second.second;
        for (const auto& id : inst.gt_ids)
            if (!inst.chunks->find(id))
                throw DataError("instance " + inst.instance_id + " names unknown chunk " + id);
        if (inst.gt_ids.empty()) throw DataError("instance " + inst.instance_id + " has no ground truth");
        out.push_back(std::move(inst));
    }
    return out;
}

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd r;
    r.n = values.size();
    if (values.empty()) return r;
    double sum = 0.0;
    for (double v : values) sum += v;
    r.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return r;
}

DatasetStats dataset_stats(const std::vector<TrainingInstance>& instances) {
    DatasetStats s;
    s.instance_count = instances.size();
    std::vector<double> files, chunks, gts, cpf, fpg, calls;
    std::size_t multi = 0, overlap = 0, call_overlap = 0, in_query = 0;
    for (const auto& inst : instances) {
        const ChunkSet& set = *inst.chunks;
        std::shared_ptr<const CallGraph> graph = inst.graph;
        if (!graph) graph = std::make_shared<CallGraph>(build_call_graph(set));

        std::set<std::string> file_set;
        for (const auto& c : set.chunks) file_set.insert(c.file_path);
        files.push_back(double(file_set.size()));
        chunks.push_back(double(set.chunks.size()));
        gts.push_back(double(inst.gt_ids.size()));
        if (!file_set.empty()) cpf.push_back(double(set.chunks.size()) / double(file_set.size()));

        std::vector<std::string> gt_paths;
        for (const auto& id : inst.gt_ids)
            if (const Chunk* c = set.find(id)) gt_paths.push_back(c->file_path);
        std::set<std::string> gt_files(gt_paths.begin(), gt_paths.end());
        fpg.push_back(double(gt_files.size()));
        if (std::any_of(gt_files.begin(), gt_files.end(),
                        [&](const std::string& f) { return inst.query_text.find(f) != std::string::npos; }))
            ++in_query;

        if (inst.gt_ids.size() >= 2) {
            ++multi;
            if (gt_files.size() < gt_paths.size()) ++overlap;
            bool linked = false;
            for (std::size_t i = 0; i < inst.gt_ids.size() && !linked; ++i)
                for (std::size_t j = 0; j < inst.gt_ids.size() && !linked; ++j)
                    if (i != j && graph->has_edge(inst.gt_ids[i], inst.gt_ids[j])) linked = true;
            if (linked) ++call_overlap;
        }

        std::size_t callers = 0, total = 0;
        for (const auto& id : graph->node_ids()) {
            std::size_t d = graph->out_degree(id);
            if (d > 0) {
                ++callers;
                total += d;
            }
        }
        if (callers > 0) calls.push_back(double(total) / double(callers));
    }
    s.files_per_repo = mean_sd(files);
    s.chunks_per_repo = mean_sd(chunks);
    s.gt_chunks = mean_sd(gts);
    s.chunks_per_file = mean_sd(cpf);
    s.files_per_gt = mean_sd(fpg);
    s.calls_per_chunk = mean_sd(calls);
    if (!instances.empty()) s.gt_file_in_query = double(in_query) / double(instances.size());
    if (multi > 0) {
        s.gt_file_overlap = double(overlap) / double(multi);
        s.gt_call_overlap = double(call_overlap) / double(multi);
    }
    return s;
}

std::string stats_to_json(const DatasetStats& s) {
    auto ms = [](const MeanSd& m) { return json{{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; };
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j = {{"instance_count", s.instance_count},
              {"files_per_repo", ms(s.files_per_repo)},
              {"chunks_per_repo", ms(s.chunks_per_repo)},
              {"gt_chunks", ms(s.gt_chunks)},
              {"chunks_per_file", ms(s.chunks_per_file)},
              {"files_per_gt", ms(s.files_per_gt)},
              {"calls_per_chunk", ms(s.calls_per_chunk)},
              {"gt_file_overlap", opt(s.gt_file_overlap)},
              {"gt_file_in_query", opt(s.gt_file_in_query)},
              {"gt_call_overlap", opt(s.gt_call_overlap)}};
    return j.dump(2);
}

}  // namespace coret
