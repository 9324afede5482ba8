#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coret/error.hpp"

// Tokenizer and statement-level parser for Python source.
//
// The parser builds the block structure of a module (definitions, compound
// statements, simple statements) from the token stream, including INDENT and
// DEDENT tracking, so line spans and class membership are exact. Expressions
// inside statements are kept as token ranges; callers that need call sites
// scan those ranges (see callgraph).
namespace coret::python {

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
    TokenKind kind;
    std::string_view text;
    int line;      // 1-based, line of the first character
    int col;       // 0-based byte column
    int end_line;  // line of the last character (differs for triple-quoted strings)
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int col, const std::string& message);
    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    int line_;
    int col_;
    std::string detail_;
};

struct TokenizeOptions {
    // When false no INDENT/DEDENT tokens are produced and indentation errors
    // are ignored; used for scanning code fragments.
    bool track_indentation = true;
    // When true an unterminated string or bracket ends the stream quietly
    // instead of throwing.
    bool lenient = false;
};

// Token text views point into `source`, which must outlive the result.
std::vector<Token> tokenize(std::string_view source, TokenizeOptions options = {});

// One name bound by an import statement.
//   import a.b.c        -> local "a",  module "a.b.c", symbol "",  binds_top_package
//   import a.b as x     -> local "x",  module "a.b",   symbol ""
//   from ..p import f   -> local "f",  module "p",     symbol "f", level 2
struct ImportBinding {
    std::string local_name;
    std::string module;
    std::string symbol;
    int level = 0;
    bool binds_top_package = false;

    friend bool operator==(const ImportBinding&, const ImportBinding&) = default;
};

enum class StatementKind { FunctionDef, ClassDef, Import, Docstring, Compound, Simple };

struct Statement {
    StatementKind kind = StatementKind::Simple;
    std::string name;         // definitions only
    bool is_async = false;    // FunctionDef only
    int start_line = 0;       // first decorator line for decorated definitions
    int header_line = 0;      // line of the `def` / `class` keyword (or first token)
    int header_end_line = 0;  // line holding the header's closing ':'
    int end_line = 0;         // last line holding a token of the statement
    std::vector<Statement> body;  // ClassDef: class body statements; otherwise empty
};

struct Module {
    std::vector<Statement> body;
    // Every import in the file, including ones nested in blocks or functions.
    std::vector<ImportBinding> imports;
    int line_count = 0;
};

// Throws SyntaxError with the location of the first problem found.
Module parse_module(std::string_view source);

// Python keywords that can never start a call expression.
bool is_keyword(std::string_view word);

}  // namespace coret::python
