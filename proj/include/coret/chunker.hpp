#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coret/chunk.hpp"
#include "coret/python_syntax.hpp"

namespace coret {

struct ChunkerConfig {
    std::vector<std::string> extensions{".py"};
    // Repo-relative globs; `*` stays inside one path segment, `**` spans any.
    std::vector<std::string> include_globs;  // empty: everything not excluded
    std::vector<std::string> exclude_globs{
        "**/tests/**", "**/test/**",     "**/vendor/**",      "**/vendored/**",
        "**/third_party/**", "**/build/**", "**/dist/**",     "**/.git/**",
        "**/__pycache__/**", "**/node_modules/**", "**/.venv/**", "**/venv/**"};
    std::uintmax_t max_file_bytes = 1u << 20;
    // Module-level code becomes a remainder chunk only with at least this many
    // non-import lines (unless the file would otherwise produce no chunk).
    int min_remainder_lines = 3;
    bool include_path = true;
};

struct SourceFile {
    std::string repo_relative_path;
    std::string content;
    int line_count = 0;

    static SourceFile from_text(std::string path, std::string content);
};

// Matches a repo-relative path against a glob. A leading "**/" also matches
// at the root, so "**/tests/**" matches "tests/a.py".
bool glob_match(std::string_view pattern, std::string_view path);

// Normalizes separators and removes "." segments; throws DataError on "..".
std::string normalize_path(std::string_view path);

// Throws python::SyntaxError (carrying the location) when the file does not parse.
std::vector<Chunk> chunk_file(const SourceFile& file, const ChunkerConfig& cfg = {});

// Throws Error when `root` is not a readable directory. Unparseable files are
// skipped with a reason instead of failing the whole repository.
ChunkSet chunk_repository(const std::filesystem::path& root, const ChunkerConfig& cfg = {},
                          std::string repo_id = {});

std::string render_chunk(const Chunk& chunk, bool include_path);

// Declaration, docstring, full constructor and one signature line per other
// method. `lines` holds the file's source lines (index 0 is line 1).
std::string render_class_representation(const python::Statement& class_node,
                                        const std::vector<std::string_view>& lines);

}  // namespace coret
