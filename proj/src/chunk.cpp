#include "coret/chunk.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "coret/error.hpp"

namespace coret {

using nlohmann::json;

std::string_view to_string(ChunkKind kind) {
    switch (kind) {
        case ChunkKind::Function: return "function";
        case ChunkKind::Method: return "method";
        case ChunkKind::ClassRepresentation: return "class_representation";
        case ChunkKind::ModuleRemainder: return "module_remainder";
    }
    return "function";
}

ChunkKind chunk_kind_from_string(std::string_view text) {
    if (text == "function") return ChunkKind::Function;
    if (text == "method") return ChunkKind::Method;
    if (text == "class_representation") return ChunkKind::ClassRepresentation;
    if (text == "module_remainder") return ChunkKind::ModuleRemainder;
    throw DataError("unknown chunk kind '" + std::string(text) + "'");
}

const Chunk* ChunkSet::find(std::string_view chunk_id) const {
    auto idx = index_of(chunk_id);
    return idx ? &chunks[*idx] : nullptr;
}

std::optional<std::size_t> ChunkSet::index_of(std::string_view chunk_id) const {
    for (std::size_t i = 0; i < chunks.size(); ++i)
        if (chunks[i].chunk_id == chunk_id) return i;
    return std::nullopt;
}

std::string_view context_body(const Chunk& chunk) {
    std::string_view text = chunk.rendered_text;
    if (!chunk.file_path.empty() && text.size() > chunk.file_path.size() &&
        text.substr(0, chunk.file_path.size()) == chunk.file_path &&
        text[chunk.file_path.size()] == '\n') {
        return text.substr(chunk.file_path.size() + 1);
    }
    return text;
}

void write_chunk_store(const ChunkSet& set, std::ostream& out) {
    for (const Chunk& c : set.chunks) {
        json rec = json::object();
        rec["chunk_id"] = c.chunk_id;
        rec["kind"] = std::string(to_string(c.kind));
        rec["qualified_name"] = c.qualified_name;
        rec["file_path"] = c.file_path;
        rec["line_start"] = c.line_span.start;
        rec["line_end"] = c.line_span.end;
        rec["body_text"] = c.body_text;
        rec["rendered_text"] = c.rendered_text;
        out << rec.dump() << '\n';
    }
}

ChunkSet read_chunk_store(std::istream& in, std::string repo_id) {
    ChunkSet set;
    set.repo_id = std::move(repo_id);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json rec = json::parse(line);
            Chunk c;
            c.chunk_id = rec.at("chunk_id").get<std::string>();
            c.kind = chunk_kind_from_string(rec.at("kind").get<std::string>());
            c.qualified_name = rec.at("qualified_name").get<std::string>();
            c.file_path = rec.at("file_path").get<std::string>();
            c.line_span = {rec.at("line_start").get<int>(), rec.at("line_end").get<int>()};
            c.body_text = rec.at("body_text").get<std::string>();
            c.rendered_text = rec.at("rendered_text").get<std::string>();
            set.chunks.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw DataError("chunk store line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return set;
}

std::filesystem::path imports_path(const std::filesystem::path& chunk_store) {
    auto p = chunk_store;
    p += ".imports.jsonl";
    return p;
}

void write_imports(const ChunkSet& set, std::ostream& out) {
    for (const auto& [file, bindings] : set.imports_by_file) {
        for (const auto& b : bindings) {
            json rec = json::object();
            rec["file_path"] = file;
            rec["local"] = b.local_name;
            rec["module"] = b.module;
            rec["symbol"] = b.symbol;
            rec["level"] = b.level;
            rec["top_package"] = b.binds_top_package;
            out << rec.dump() << '\n';
        }
    }
}

void read_imports(std::istream& in, ChunkSet& set) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json rec = json::parse(line);
            python::ImportBinding b;
            b.local_name = rec.at("local").get<std::string>();
            b.module = rec.at("module").get<std::string>();
            b.symbol = rec.at("symbol").get<std::string>();
            b.level = rec.at("level").get<int>();
            b.binds_top_package = rec.at("top_package").get<bool>();
            set.imports_by_file[rec.at("file_path").get<std::string>()].push_back(std::move(b));
        } catch (const json::exception& e) {
            throw DataError("imports sidecar line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void save_chunk_set(const ChunkSet& set, const std::filesystem::path& chunk_store) {
    std::ofstream out(chunk_store, std::ios::binary);
    if (!out) throw Error("cannot write " + chunk_store.string());
    write_chunk_store(set, out);
    std::ofstream side(imports_path(chunk_store), std::ios::binary);
    if (!side) throw Error("cannot write " + imports_path(chunk_store).string());
    write_imports(set, side);
}

ChunkSet load_chunk_set(const std::filesystem::path& chunk_store, std::string repo_id) {
    std::ifstream in(chunk_store, std::ios::binary);
    if (!in) throw DataError("cannot read chunk store " + chunk_store.string());
    if (repo_id.empty()) repo_id = chunk_store.stem().string();
    ChunkSet set = read_chunk_store(in, std::move(repo_id));
    std::ifstream side(imports_path(chunk_store), std::ios::binary);
    if (side) read_imports(side, set);
    return set;
}

}  // namespace coret
