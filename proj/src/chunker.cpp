#include "coret/chunker.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "coret/error.hpp"

namespace coret {

namespace fs = std::filesystem;
using python::Statement;
using python::StatementKind;

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t begin = 0;
    while (begin < text.size()) {
        std::size_t nl = text.find('\n', begin);
        std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        std::string_view line = text.substr(begin, end - begin);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        begin = nl + 1;
    }
    return lines;
}

std::string slice(const std::vector<std::string_view>& lines, int start, int end) {
    std::string out;
    for (int l = start; l <= end && l <= static_cast<int>(lines.size()); ++l) {
        if (l > start) out.push_back('\n');
        out.append(lines[l - 1]);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// A multi-line header collapsed onto its first line.
std::string one_line(const std::vector<std::string_view>& lines, int start, int end) {
    std::string out(lines[start - 1]);
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    for (int l = start + 1; l <= end; ++l) {
        std::string_view part = trim(lines[l - 1]);
        if (part.empty()) continue;
        if (!out.empty() && out.back() != '(' && out.back() != '[') out.push_back(' ');
        out.append(part);
    }
    return out;
}

std::string class_declaration(const Statement& cls, const std::vector<std::string_view>& lines) {
    return slice(lines, cls.header_line, cls.header_end_line);
}

std::string with_path(const std::string& path, const std::string& body, bool include_path) {
    return include_path ? path + "\n" + body : body;
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : -1;
        if (extra < 0 || i + extra >= s.size() + (extra == 0 ? 1 : 0)) return false;
        for (int k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        }
        i += extra + 1;
    }
    return true;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; });
}

bool match_segment(std::string_view pat, std::string_view text) {
    // Iterative wildcard match with backtracking on the last '*'.
    std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pat.size() && pat[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

std::vector<std::string_view> split_segments(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (begin <= s.size()) {
        std::size_t slash = s.find('/', begin);
        std::size_t end = slash == std::string_view::npos ? s.size() : slash;
        if (end > begin) out.push_back(s.substr(begin, end - begin));
        if (slash == std::string_view::npos) break;
        begin = slash + 1;
    }
    return out;
}

bool match_segments(const std::vector<std::string_view>& pat, std::size_t pi,
                    const std::vector<std::string_view>& path, std::size_t ti) {
    if (pi == pat.size()) return ti == path.size();
    if (pat[pi] == "**") {
        for (std::size_t k = ti; k <= path.size(); ++k)
            if (match_segments(pat, pi + 1, path, k)) return true;
        return false;
    }
    if (ti == path.size()) return false;
    return match_segment(pat[pi], path[ti]) && match_segments(pat, pi + 1, path, ti + 1);
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view path) {
    return match_segments(split_segments(pattern), 0, split_segments(path), 0);
}

std::string normalize_path(std::string_view path) {
    std::string p(path);
    std::replace(p.begin(), p.end(), '\\', '/');
    std::string out;
    for (std::string_view seg : split_segments(p)) {
        if (seg == ".") continue;
        if (seg == "..") throw DataError("path escapes repository: " + std::string(path));
        if (!out.empty()) out.push_back('/');
        out.append(seg);
    }
    return out;
}

SourceFile SourceFile::from_text(std::string path, std::string content) {
    SourceFile f;
    f.repo_relative_path = normalize_path(path);
    f.line_count = static_cast<int>(split_lines(content).size());
    f.content = std::move(content);
    return f;
}

std::string render_class_representation(const Statement& class_node,
                                        const std::vector<std::string_view>& lines) {
    std::vector<std::string> parts;
    parts.push_back(class_declaration(class_node, lines));
    const Statement* ctor = nullptr;
    for (const Statement& s : class_node.body) {
        if (s.kind == StatementKind::FunctionDef && s.name == "__init__") {
            ctor = &s;
            break;
        }
    }
    if (!class_node.body.empty() && class_node.body.front().kind == StatementKind::Docstring) {
        const Statement& doc = class_node.body.front();
        parts.push_back(slice(lines, doc.start_line, doc.end_line));
    }
    if (ctor) parts.push_back(slice(lines, ctor->start_line, ctor->end_line));
    for (const Statement& s : class_node.body) {
        if (s.kind != StatementKind::FunctionDef || &s == ctor) continue;
        parts.push_back(one_line(lines, s.header_line, s.header_end_line));
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back('\n');
        out += parts[i];
    }
    return out;
}

std::string render_chunk(const Chunk& chunk, bool include_path) {
    std::string body(context_body(chunk));
    return include_path ? chunk.file_path + "\n" + body : body;
}

namespace {

std::vector<Chunk> chunk_parsed(const SourceFile& file, const python::Module& module,
                                const ChunkerConfig& cfg) {
    auto lines = split_lines(file.content);
    const std::string& path = file.repo_relative_path;

    std::vector<Chunk> chunks;
    std::vector<const Statement*> remainder;
    int remainder_lines = 0;

    auto add = [&](ChunkKind kind, std::string qname, int start, int end, std::string context) {
        Chunk c;
        c.kind = kind;
        c.qualified_name = std::move(qname);
        c.file_path = path;
        c.line_span = {start, end};
        c.body_text = slice(lines, start, end);
        c.rendered_text = with_path(path, context, cfg.include_path);
        chunks.push_back(std::move(c));
    };

    for (const Statement& s : module.body) {
        if (s.kind == StatementKind::FunctionDef) {
            std::string body = slice(lines, s.start_line, s.end_line);
            add(ChunkKind::Function, s.name, s.start_line, s.end_line, body);
        } else if (s.kind == StatementKind::ClassDef) {
            add(ChunkKind::ClassRepresentation, s.name, s.start_line, s.end_line,
                render_class_representation(s, lines));
            std::string decl = class_declaration(s, lines);
            for (const Statement& m : s.body) {
                if (m.kind != StatementKind::FunctionDef) continue;
                add(ChunkKind::Method, s.name + "." + m.name, m.start_line, m.end_line,
                    decl + "\n" + slice(lines, m.start_line, m.end_line));
            }
        } else {
            remainder.push_back(&s);
            if (s.kind != StatementKind::Import) remainder_lines += s.end_line - s.start_line + 1;
        }
    }

    if (!remainder.empty() && (remainder_lines >= cfg.min_remainder_lines || chunks.empty())) {
        std::string body;
        for (const Statement* s : remainder) {
            if (!body.empty()) body.push_back('\n');
            body += slice(lines, s->start_line, s->end_line);
        }
        Chunk c;
        c.kind = ChunkKind::ModuleRemainder;
        c.qualified_name = "<module>";
        c.file_path = path;
        c.line_span = {remainder.front()->start_line, remainder.back()->end_line};
        c.body_text = body;
        c.rendered_text = with_path(path, body, cfg.include_path);
        chunks.push_back(std::move(c));
    }

    std::stable_sort(chunks.begin(), chunks.end(),
                     [](const Chunk& a, const Chunk& b) { return a.line_span.start < b.line_span.start; });

    std::map<std::string, int> seen;
    for (Chunk& c : chunks) {
        int n = ++seen[c.qualified_name];
        c.chunk_id = path + "::" + c.qualified_name;
        if (n > 1) c.chunk_id += "#" + std::to_string(n);
    }
    return chunks;
}

}  // namespace

std::vector<Chunk> chunk_file(const SourceFile& file, const ChunkerConfig& cfg) {
    return chunk_parsed(file, python::parse_module(file.content), cfg);
}

namespace {

struct FileOutcome {
    std::vector<Chunk> chunks;
    std::vector<python::ImportBinding> imports;
    std::string skip_reason;  // non-empty when skipped
};

std::string file_extension(std::string_view path) {
    std::size_t slash = path.rfind('/');
    std::string_view name = slash == std::string_view::npos ? path : path.substr(slash + 1);
    std::size_t dot = name.rfind('.');
    if (dot == std::string_view::npos || dot == 0) return {};
    return std::string(name.substr(dot));
}

std::string filter_reason(const std::string& rel, std::uintmax_t size, const ChunkerConfig& cfg) {
    std::string ext = file_extension(rel);
    if (std::find(cfg.extensions.begin(), cfg.extensions.end(), ext) == cfg.extensions.end())
        return "non-source extension";
    if (!cfg.include_globs.empty() &&
        std::none_of(cfg.include_globs.begin(), cfg.include_globs.end(),
                     [&](const std::string& g) { return glob_match(g, rel); }))
        return "not matched by include globs";
    for (const std::string& g : cfg.exclude_globs)
        if (glob_match(g, rel)) return "excluded by glob " + g;
    if (size > cfg.max_file_bytes) return "exceeds size cap";
    return {};
}

FileOutcome process_file(const fs::path& abs, const std::string& rel, const ChunkerConfig& cfg) {
    FileOutcome out;
    std::error_code ec;
    auto size = fs::file_size(abs, ec);
    if (ec) {
        out.skip_reason = "unreadable file";
        return out;
    }
    out.skip_reason = filter_reason(rel, size, cfg);
    if (!out.skip_reason.empty()) return out;

    std::ifstream in(abs, std::ios::binary);
    if (!in) {
        out.skip_reason = "unreadable file";
        return out;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    if (blank(content)) {
        out.skip_reason = "empty file";
        return out;
    }
    if (!valid_utf8(content)) {
        out.skip_reason = "invalid UTF-8";
        return out;
    }
    try {
        SourceFile file = SourceFile::from_text(rel, std::move(content));
        python::Module module = python::parse_module(file.content);
        out.chunks = chunk_parsed(file, module, cfg);
        out.imports = std::move(module.imports);
    } catch (const python::SyntaxError& e) {
        out.chunks.clear();
        out.skip_reason = e.what();
    }
    return out;
}

}  // namespace

ChunkSet chunk_repository(const fs::path& root, const ChunkerConfig& cfg, std::string repo_id) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error("cannot read repository root " + root.string());

    std::vector<std::pair<std::string, fs::path>> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
    if (ec) throw Error("cannot read repository root " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw Error("error walking " + root.string() + ": " + ec.message());
        if (!it->is_regular_file(ec)) continue;
        std::string rel = normalize_path(fs::relative(it->path(), root).generic_string());
        files.emplace_back(std::move(rel), it->path());
    }
    std::sort(files.begin(), files.end());

    // Files are independent; each worker writes only its own slot.
    std::vector<FileOutcome> outcomes(files.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++)
            outcomes[i] = process_file(files[i].second, files[i].first, cfg);
    };
    unsigned n_threads = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), files.size());
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work);
        work();
    }

    ChunkSet set;
    set.repo_id = repo_id.empty() ? fs::absolute(root).lexically_normal().filename().string() : std::move(repo_id);
    if (set.repo_id.empty()) set.repo_id = fs::absolute(root).lexically_normal().parent_path().filename().string();
    for (std::size_t i = 0; i < files.size(); ++i) {
        FileOutcome& o = outcomes[i];
        if (!o.skip_reason.empty()) {
            set.skipped_files.push_back({files[i].first, o.skip_reason});
            continue;
        }
        set.imports_by_file[files[i].first] = std::move(o.imports);
        for (Chunk& c : o.chunks) set.chunks.push_back(std::move(c));
    }
    return set;
}

}  // namespace coret
