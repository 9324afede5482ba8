#include "coret/callgraph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "coret/error.hpp"
#include "coret/python_syntax.hpp"

namespace coret {

using python::ImportBinding;
using python::Token;
using python::TokenKind;

Direction direction_from_string(std::string_view text) {
    if (text == "downstream" || text == "down") return Direction::Downstream;
    if (text == "upstream" || text == "up") return Direction::Upstream;
    if (text == "both") return Direction::Both;
    throw Error("unknown direction '" + std::string(text) + "'");
}

CallGraph::CallGraph(std::vector<std::string> node_ids) : nodes_(std::move(node_ids)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_.emplace(nodes_[i], i);
}

bool CallGraph::has_node(std::string_view id) const { return node_index_.find(id) != node_index_.end(); }

bool CallGraph::has_edge(std::string_view caller, std::string_view callee) const {
    return edge_keys_.count(std::pair<std::string, std::string>(caller, callee)) > 0;
}

bool CallGraph::add_edge(CallEdge edge) {
    if (edge.caller == edge.callee || !has_node(edge.caller) || !has_node(edge.callee)) return false;
    if (!edge_keys_.emplace(edge.caller, edge.callee).second) return false;
    in_[edge.callee].push_back(edge.caller);
    out_[edge.caller].push_back(std::move(edge));
    return true;
}

std::size_t CallGraph::out_degree(std::string_view id) const {
    auto it = out_.find(id);
    return it == out_.end() ? 0 : it->second.size();
}

namespace {

bool site_before(const CallEdge& a, const CallEdge& b) {
    return std::tie(a.site_line, a.site_col, a.callee) < std::tie(b.site_line, b.site_col, b.callee);
}

}  // namespace

std::vector<CallEdge> CallGraph::edges() const {
    std::vector<CallEdge> all;
    all.reserve(edge_keys_.size());
    for (const std::string& node : nodes_) {
        auto it = out_.find(node);
        if (it == out_.end()) continue;
        std::vector<CallEdge> mine = it->second;
        std::sort(mine.begin(), mine.end(), site_before);
        all.insert(all.end(), mine.begin(), mine.end());
    }
    return all;
}

std::vector<std::string> neighbors(const CallGraph& graph, std::string_view chunk_id, Direction direction) {
    if (!graph.has_node(chunk_id)) throw Error("unknown chunk id '" + std::string(chunk_id) + "'");
    std::vector<std::string> result;
    if (direction != Direction::Upstream) {
        auto it = graph.out_.find(chunk_id);
        if (it != graph.out_.end()) {
            std::vector<CallEdge> outs = it->second;
            std::sort(outs.begin(), outs.end(), site_before);
            for (const auto& e : outs) result.push_back(e.callee);
        }
    }
    if (direction != Direction::Downstream) {
        auto it = graph.in_.find(chunk_id);
        if (it != graph.in_.end()) {
            std::vector<std::string> ins = it->second;
            std::sort(ins.begin(), ins.end());
            for (auto& id : ins)
                if (std::find(result.begin(), result.end(), id) == result.end()) result.push_back(std::move(id));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Call resolution

namespace {

using Chain = std::vector<std::string>;

std::string join(const Chain& parts, std::size_t begin = 0, std::size_t end = std::string::npos) {
    std::string out;
    end = std::min(end, parts.size());
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back('.');
        out += parts[i];
    }
    return out;
}

std::string module_name_of(const std::string& path) {
    std::string m = path;
    if (m.size() > 3 && m.compare(m.size() - 3, 3, ".py") == 0) m.resize(m.size() - 3);
    std::replace(m.begin(), m.end(), '/', '.');
    const std::string init = ".__init__";
    if (m == "__init__") return "";
    if (m.size() > init.size() && m.compare(m.size() - init.size(), init.size(), init) == 0)
        m.resize(m.size() - init.size());
    return m;
}

bool is_package_file(const std::string& path) {
    return path == "__init__.py" || (path.size() >= 12 && path.compare(path.size() - 12, 12, "/__init__.py") == 0);
}

struct CallSite {
    Chain chain;
    int line;
    int col;
};

struct ChunkScan {
    std::vector<CallSite> calls;
    std::set<std::string> local_defs;
    std::map<std::string, Chain> types;  // receiver expression -> class chain
};

bool is_op(const Token& t, std::string_view op) { return t.kind == TokenKind::Op && t.text == op; }
bool is_name(const Token& t) { return t.kind == TokenKind::Name && !python::is_keyword(t.text); }

// Reads Name ('.' Name)* starting at i; returns index of the last name token.
std::size_t read_chain(const std::vector<Token>& toks, std::size_t i, Chain& out) {
    out.assign(1, std::string(toks[i].text));
    while (i + 2 < toks.size() && is_op(toks[i + 1], ".") && is_name(toks[i + 2])) {
        out.emplace_back(toks[i + 2].text);
        i += 2;
    }
    return i;
}

ChunkScan scan_chunk(std::string_view text, ChunkKind kind) {
    python::TokenizeOptions opts;
    opts.track_indentation = false;
    opts.lenient = true;
    std::vector<Token> toks = python::tokenize(text, opts);

    ChunkScan scan;
    int method_col = -1;
    bool first_def_seen = false;
    std::vector<char> brackets;

    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind == TokenKind::Op) {
            if (t.text == "(" || t.text == "[" || t.text == "{") brackets.push_back(t.text[0]);
            if ((t.text == ")" || t.text == "]" || t.text == "}") && !brackets.empty()) brackets.pop_back();
            continue;
        }
        if (t.kind != TokenKind::Name) continue;
        if ((t.text == "def" || t.text == "class") && i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Name) {
            std::string defined(toks[i + 1].text);
            bool nested = true;
            if (kind == ChunkKind::Function || kind == ChunkKind::Method) {
                if (!first_def_seen && t.text == "def") nested = false;
            } else if (kind == ChunkKind::ClassRepresentation) {
                if (t.text == "def" && (method_col < 0 || t.col == method_col)) {
                    method_col = t.col;
                    nested = false;
                }
            }
            if (t.text == "def") first_def_seen = true;
            if (nested) scan.local_defs.insert(defined);
            ++i;
            continue;
        }
        if (python::is_keyword(t.text)) continue;
        if (i > 0 && is_op(toks[i - 1], ".")) continue;

        bool stmt_start = i == 0 || toks[i - 1].kind == TokenKind::Newline || is_op(toks[i - 1], ";");
        Chain chain;
        std::size_t last = read_chain(toks, i, chain);
        if (last + 1 < toks.size()) {
            const Token& next = toks[last + 1];
            if (is_op(next, "(")) {
                scan.calls.push_back({chain, t.line, t.col});
            } else if (is_op(next, "=") && stmt_start && last + 2 < toks.size() && is_name(toks[last + 2])) {
                Chain rhs;
                std::size_t rhs_last = read_chain(toks, last + 2, rhs);
                if (rhs_last + 1 < toks.size() && is_op(toks[rhs_last + 1], "(")) scan.types[join(chain)] = rhs;
            } else if (is_op(next, ":") && last + 2 < toks.size() && is_name(toks[last + 2])) {
                bool param = !brackets.empty() && brackets.back() == '(' && i > 0 &&
                             (is_op(toks[i - 1], "(") || is_op(toks[i - 1], ","));
                if (stmt_start || param) {
                    Chain ann;
                    std::size_t ann_last = read_chain(toks, last + 2, ann);
                    const Token& after = toks[std::min(ann_last + 1, toks.size() - 1)];
                    if (is_op(after, ",") || is_op(after, ")") || is_op(after, "=") ||
                        after.kind == TokenKind::Newline || after.kind == TokenKind::EndMarker) {
                        scan.types[join(chain)] = ann;
                    }
                }
            }
        }
        i = last;
    }
    return scan;
}

class Resolver {
public:
    explicit Resolver(const ChunkSet& set) : set_(set) {
        for (const Chunk& c : set.chunks) {
            symbols_[c.file_path][c.qualified_name].push_back(c.chunk_id);
            if (c.kind == ChunkKind::ClassRepresentation) classes_[c.file_path].insert(c.qualified_name);
            files_.insert(c.file_path);
        }
        for (const auto& [file, _] : set.imports_by_file) files_.insert(file);
        for (const std::string& f : files_) modules_[module_name_of(f)].push_back(f);
    }

    std::vector<std::string> resolve(const Chain& chain, const std::string& file, const std::string& class_name,
                                     const ChunkScan& scan,
                                     const std::map<std::string, Chain>& class_types) const {
        std::vector<std::string> ids;
        const std::size_t n = chain.size();
        if (n == 1) {
            const std::string& name = chain[0];
            if (scan.local_defs.count(name)) return ids;
            append(ids, top_level(file, name));
            if (!ids.empty()) return ids;
            for (const ImportBinding& b : imports(file)) {
                if (b.local_name != name || b.symbol.empty()) continue;
                for (const std::string& f : module_files(absolute_module(b, file)))
                    append(ids, top_level(f, b.symbol));
            }
            return dedup(ids);
        }
        Chain receiver(chain.begin(), chain.end() - 1);
        const std::string& attr = chain.back();
        if (receiver.size() == 1 && (receiver[0] == "self" || receiver[0] == "cls") && !class_name.empty()) {
            append(ids, symbol(file, class_name + "." + attr));
            return ids;
        }
        std::string key = join(receiver);
        const Chain* typed = nullptr;
        if (auto it = scan.types.find(key); it != scan.types.end()) {
            typed = &it->second;
        } else if (auto cit = class_types.find(key); cit != class_types.end()) {
            typed = &cit->second;
        }
        if (typed) {
            for (const auto& [f, cls] : resolve_class(*typed, file)) append(ids, symbol(f, cls + "." + attr));
            return dedup(ids);
        }
        if (receiver[0] == "self" || receiver[0] == "cls") return ids;
        for (const auto& [f, cls] : resolve_class(receiver, file)) append(ids, symbol(f, cls + "." + attr));
        if (!ids.empty()) return dedup(ids);
        for (const std::string& f : resolve_module(receiver, file)) append(ids, top_level(f, attr));
        return dedup(ids);
    }

private:
    static void append(std::vector<std::string>& out, const std::vector<std::string>& more) {
        out.insert(out.end(), more.begin(), more.end());
    }
    static std::vector<std::string> dedup(std::vector<std::string> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }

    const std::vector<ImportBinding>& imports(const std::string& file) const {
        static const std::vector<ImportBinding> kNone;
        auto it = set_.imports_by_file.find(file);
        return it == set_.imports_by_file.end() ? kNone : it->second;
    }

    std::vector<std::string> symbol(const std::string& file, const std::string& qname) const {
        auto f = symbols_.find(file);
        if (f == symbols_.end()) return {};
        auto s = f->second.find(qname);
        return s == f->second.end() ? std::vector<std::string>{} : s->second;
    }

    // Top-level function or class (never a method) named `name`.
    std::vector<std::string> top_level(const std::string& file, const std::string& name) const {
        if (name.find('.') != std::string::npos) return {};
        return symbol(file, name);
    }

    bool is_class(const std::string& file, const std::string& name) const {
        auto it = classes_.find(file);
        return it != classes_.end() && it->second.count(name) > 0;
    }

    // Exact module match, else files whose module name ends with ".name"
    // (source roots such as src/).
    std::vector<std::string> module_files(const std::string& name) const {
        if (name.empty()) return {};
        if (auto it = modules_.find(name); it != modules_.end()) return it->second;
        std::vector<std::string> out;
        const std::string suffix = "." + name;
        for (const auto& [mod, files] : modules_) {
            if (mod.size() > suffix.size() && mod.compare(mod.size() - suffix.size(), suffix.size(), suffix) == 0)
                out.insert(out.end(), files.begin(), files.end());
        }
        return out;
    }

    std::string absolute_module(const ImportBinding& b, const std::string& file) const {
        if (b.level == 0) return b.module;
        std::string pkg = module_name_of(file);
        int up = is_package_file(file) ? b.level - 1 : b.level;
        for (int i = 0; i < up; ++i) {
            auto dot = pkg.rfind('.');
            pkg = dot == std::string::npos ? std::string() : pkg.substr(0, dot);
        }
        if (b.module.empty()) return pkg;
        return pkg.empty() ? b.module : pkg + "." + b.module;
    }

    std::vector<std::string> resolve_module(const Chain& chain, const std::string& file) const {
        std::vector<std::string> out;
        for (const ImportBinding& b : imports(file)) {
            if (b.local_name != chain[0]) continue;
            std::string rest = join(chain, 1);
            std::string name;
            if (b.symbol.empty()) {
                name = b.binds_top_package ? join(chain) : b.module + (rest.empty() ? "" : "." + rest);
            } else {
                std::string base = absolute_module(b, file);
                name = (base.empty() ? "" : base + ".") + b.symbol + (rest.empty() ? "" : "." + rest);
            }
            append(out, module_files(name));
        }
        return dedup(out);
    }

    std::vector<std::pair<std::string, std::string>> resolve_class(const Chain& chain, const std::string& file) const {
        std::vector<std::pair<std::string, std::string>> out;
        if (chain.size() == 1) {
            if (is_class(file, chain[0])) {
                out.emplace_back(file, chain[0]);
                return out;
            }
            for (const ImportBinding& b : imports(file)) {
                if (b.local_name != chain[0] || b.symbol.empty()) continue;
                for (const std::string& f : module_files(absolute_module(b, file)))
                    if (is_class(f, b.symbol)) out.emplace_back(f, b.symbol);
            }
            return out;
        }
        Chain module(chain.begin(), chain.end() - 1);
        for (const std::string& f : resolve_module(module, file))
            if (is_class(f, chain.back())) out.emplace_back(f, chain.back());
        return out;
    }

    const ChunkSet& set_;
    std::set<std::string> files_;
    std::map<std::string, std::map<std::string, std::vector<std::string>>> symbols_;
    std::map<std::string, std::set<std::string>> classes_;
    std::map<std::string, std::vector<std::string>> modules_;
};

std::string analysis_text(const Chunk& c) {
    return c.kind == ChunkKind::ClassRepresentation ? std::string(context_body(c)) : c.body_text;
}

std::string enclosing_class(const Chunk& c) {
    if (c.kind == ChunkKind::ClassRepresentation) return c.qualified_name;
    if (c.kind == ChunkKind::Method) return c.qualified_name.substr(0, c.qualified_name.rfind('.'));
    return {};
}

}  // namespace

CallGraph build_call_graph(const ChunkSet& chunks) {
    std::vector<std::string> ids;
    ids.reserve(chunks.size());
    for (const Chunk& c : chunks.chunks) ids.push_back(c.chunk_id);
    CallGraph graph(std::move(ids));

    std::vector<ChunkScan> scans;
    scans.reserve(chunks.size());
    // (file, class) -> "self.x" style receiver types seen in any member chunk
    std::map<std::pair<std::string, std::string>, std::map<std::string, Chain>> class_types;
    for (const Chunk& c : chunks.chunks) {
        scans.push_back(scan_chunk(analysis_text(c), c.kind));
        std::string cls = enclosing_class(c);
        if (cls.empty()) continue;
        for (const auto& [key, type] : scans.back().types) {
            if (key.rfind("self.", 0) == 0 || key.rfind("cls.", 0) == 0)
                class_types[{c.file_path, cls}].emplace(key, type);
        }
    }

    Resolver resolver(chunks);
    static const std::map<std::string, Chain> kNoTypes;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const Chunk& c = chunks.chunks[i];
        std::string cls = enclosing_class(c);
        auto ct = class_types.find({c.file_path, cls});
        const auto& member_types = ct == class_types.end() ? kNoTypes : ct->second;
        for (const CallSite& site : scans[i].calls) {
            ++graph.diagnostics.call_sites;
            auto targets = resolver.resolve(site.chain, c.file_path, cls, scans[i], member_types);
            if (targets.empty()) {
                ++graph.diagnostics.unresolved_sites;
                continue;
            }
            ++graph.diagnostics.resolved_sites;
            for (std::string& target : targets) graph.add_edge({c.chunk_id, std::move(target), site.line, site.col});
        }
    }
    return graph;
}

// ---------------------------------------------------------------------------

ContextualizedChunk assemble_context(const Chunk& chunk, const CallGraph& graph, const ChunkSet& chunks,
                                     std::size_t budget, Direction direction) {
    if (budget < chunk.rendered_text.size()) throw Error("budget too small");
    ContextualizedChunk ctx;
    ctx.base_chunk_id = chunk.chunk_id;
    ctx.context_text = chunk.rendered_text;
    ctx.segment_spans.push_back({0, ctx.context_text.size(), SegmentKind::Base});

    for (const std::string& id : neighbors(graph, chunk.chunk_id, direction)) {
        const Chunk* n = chunks.find(id);
        if (!n) continue;
        std::string_view body = context_body(*n);
        if (ctx.context_text.size() + kDownToken.size() + body.size() > budget) break;
        ctx.context_text += kDownToken;
        std::size_t begin = ctx.context_text.size();
        ctx.context_text += body;
        ctx.segment_spans.push_back({begin, ctx.context_text.size(), SegmentKind::Neighbor});
        ctx.included_neighbor_ids.push_back(id);
    }
    return ctx;
}

void write_graph(const CallGraph& graph, std::ostream& out) {
    for (const CallEdge& e : graph.edges()) {
        nlohmann::json rec = nlohmann::json::object();
        rec["caller"] = e.caller;
        rec["callee"] = e.callee;
        out << rec.dump() << '\n';
    }
}

CallGraph read_graph(std::istream& in, const ChunkSet& chunks) {
    std::vector<std::string> ids;
    for (const Chunk& c : chunks.chunks) ids.push_back(c.chunk_id);
    CallGraph graph(std::move(ids));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string caller, callee;
        try {
            auto rec = nlohmann::json::parse(line);
            caller = rec.at("caller").get<std::string>();
            callee = rec.at("callee").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("graph line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!graph.has_node(caller) || !graph.has_node(callee))
            throw DataError("graph line " + std::to_string(lineno) + ": edge endpoint not in chunk set");
        graph.add_edge({caller, callee, lineno, 0});
    }
    return graph;
}

void save_graph(const CallGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_graph(graph, out);
}

CallGraph load_graph(const std::filesystem::path& path, const ChunkSet& chunks) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read graph " + path.string());
    return read_graph(in, chunks);
}

}  // namespace coret
