#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coret/python_syntax.hpp"

namespace coret {

enum class ChunkKind { Function, Method, ClassRepresentation, ModuleRemainder };

std::string_view to_string(ChunkKind kind);
ChunkKind chunk_kind_from_string(std::string_view text);

// Inclusive, 1-based.
struct LineSpan {
    int start = 0;
    int end = 0;

    bool contains(int line) const noexcept { return start <= line && line <= end; }
    int length() const noexcept { return end - start + 1; }
    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

// One retrieval atom.
struct Chunk {
    std::string chunk_id;        // file_path + "::" + qualified_name [+ "#n"]
    ChunkKind kind = ChunkKind::Function;
    std::string qualified_name;  // "f", "A", "A.f", "<module>"
    std::string file_path;       // repo-relative, forward slashes
    LineSpan line_span;
    std::string body_text;       // raw source slice
    std::string rendered_text;   // text presented to embedders

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct SkippedFile {
    std::string path;
    std::string reason;

    friend bool operator==(const SkippedFile&, const SkippedFile&) = default;
};

struct ChunkSet {
    std::string repo_id;
    std::vector<Chunk> chunks;  // sorted by (file_path, line_span.start)
    std::vector<SkippedFile> skipped_files;
    // Import bindings of every retained file; the call-graph resolver needs
    // them even when no chunk carries the import lines.
    std::map<std::string, std::vector<python::ImportBinding>> imports_by_file;

    std::size_t size() const noexcept { return chunks.size(); }
    const Chunk* find(std::string_view chunk_id) const;
    std::optional<std::size_t> index_of(std::string_view chunk_id) const;
};

// Text of the chunk without its leading file-path line (if it has one).
std::string_view context_body(const Chunk& chunk);

// Chunk store: one JSON object per line with exactly the fields
// chunk_id, kind, qualified_name, file_path, line_start, line_end,
// body_text, rendered_text. Imports go to a sidecar (see imports_path).
void write_chunk_store(const ChunkSet& set, std::ostream& out);
ChunkSet read_chunk_store(std::istream& in, std::string repo_id = {});

// Sidecar file holding one {file_path, local, module, symbol, level,
// top_package} record per import binding.
std::filesystem::path imports_path(const std::filesystem::path& chunk_store);
void write_imports(const ChunkSet& set, std::ostream& out);
void read_imports(std::istream& in, ChunkSet& set);

void save_chunk_set(const ChunkSet& set, const std::filesystem::path& chunk_store);
ChunkSet load_chunk_set(const std::filesystem::path& chunk_store, std::string repo_id = {});

}  // namespace coret
