#include "coret/python_syntax.hpp"

#include <algorithm>
#include <array>
#include <optional>

namespace coret::python {

SyntaxError::SyntaxError(int line, int col, const std::string& message)
    : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + message),
      line_(line),
      col_(col),
      detail_(message) {}

bool is_keyword(std::string_view word) {
    static constexpr std::array<std::string_view, 35> kKeywords = {
        "False",  "None",   "True",    "and",      "as",     "assert", "async",
        "await",  "break",  "class",   "continue", "def",    "del",    "elif",
        "else",   "except", "finally", "for",      "from",   "global", "if",
        "import", "in",     "is",      "lambda",   "nonlocal", "not",  "or",
        "pass",   "raise",  "return",  "try",      "while",  "with",   "yield"};
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

namespace {

bool is_name_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool is_name_char(unsigned char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_string_prefix(std::string_view word) {
    if (word.size() > 2) return false;
    std::string lower;
    for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
    static constexpr std::array<std::string_view, 11> kPrefixes = {
        "r", "u", "b", "f", "br", "rb", "fr", "rf", "t", "tr", "rt"};
    return std::find(kPrefixes.begin(), kPrefixes.end(), lower) != kPrefixes.end();
}

constexpr std::array<std::string_view, 24> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**",
    "//",  "<<",  ">>",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};
constexpr std::string_view kSingleCharOps = "+-*/%@&|^~<>()[]{},:;.=!";

class Tokenizer {
public:
    Tokenizer(std::string_view src, TokenizeOptions opts) : src_(src), opts_(opts) {
        if (src_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3, line_start_ = 3;
    }

    std::vector<Token> run() {
        try {
            scan();
        } catch (const SyntaxError&) {
            if (!opts_.lenient) throw;
        }
        finish();
        return std::move(out_);
    }

private:
    int col() const { return static_cast<int>(pos_ - line_start_); }

    void emit(TokenKind kind, std::size_t begin, std::size_t end, int line, int col, int end_line) {
        out_.push_back(Token{kind, src_.substr(begin, end - begin), line, col, end_line});
        if (kind != TokenKind::Newline && kind != TokenKind::Indent && kind != TokenKind::Dedent)
            line_has_tokens_ = true;
    }

    void newline_char() {
        ++pos_;
        ++line_;
        line_start_ = pos_;
    }

    void scan() {
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            if (at_line_start && brackets_.empty()) {
                if (!handle_indentation()) continue;  // blank or comment-only line consumed
                at_line_start = false;
            }
            if (pos_ >= src_.size()) break;
            unsigned char c = src_[pos_];
            if (c == '\n' || c == '\r') {
                if (brackets_.empty() && line_has_tokens_) {
                    emit(TokenKind::Newline, pos_, pos_, line_, col(), line_);
                    line_has_tokens_ = false;
                }
                if (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
                newline_char();
                at_line_start = brackets_.empty();
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\f') {
                ++pos_;
                continue;
            }
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
                continue;
            }
            if (c == '\\') {
                std::size_t next = pos_ + 1;
                if (next < src_.size() && src_[next] == '\r') ++next;
                if (next < src_.size() && src_[next] == '\n') {
                    pos_ = next;
                    newline_char();
                    continue;
                }
                if (next >= src_.size()) {
                    pos_ = next;
                    continue;
                }
                throw SyntaxError(line_, col(), "unexpected character after line continuation");
            }
            if (is_name_start(c)) {
                scan_name();
                continue;
            }
            if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
                scan_number();
                continue;
            }
            if (c == '\'' || c == '"') {
                scan_string(pos_);
                continue;
            }
            scan_operator();
        }
    }

    // Returns false when the whole line was blank/comment and has been consumed.
    bool handle_indentation() {
        int width = 0;
        std::size_t p = pos_;
        while (p < src_.size()) {
            char c = src_[p];
            if (c == ' ') {
                ++width;
            } else if (c == '\t') {
                width = (width / 8 + 1) * 8;
            } else if (c == '\f') {
                width = 0;
            } else {
                break;
            }
            ++p;
        }
        if (p >= src_.size()) {
            pos_ = p;
            return false;
        }
        char c = src_[p];
        if (c == '#' || c == '\n' || c == '\r') {
            pos_ = p;
            while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
            if (pos_ < src_.size()) {
                if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
                newline_char();
            }
            return false;
        }
        if (c == '\\') {
            // Continuation at line start: indentation of the joined line is what counts.
            pos_ = p;
            return true;
        }
        pos_ = p;
        if (!opts_.track_indentation) return true;
        if (width > indents_.back()) {
            indents_.push_back(width);
            emit(TokenKind::Indent, pos_, pos_, line_, col(), line_);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                emit(TokenKind::Dedent, pos_, pos_, line_, col(), line_);
            }
            if (width != indents_.back())
                throw SyntaxError(line_, col(), "unindent does not match any outer indentation level");
        }
        return true;
    }

    void scan_name() {
        std::size_t begin = pos_;
        int start_col = col();
        while (pos_ < src_.size() && is_name_char(src_[pos_])) ++pos_;
        std::string_view word = src_.substr(begin, pos_ - begin);
        if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(word)) {
            pos_ = begin;
            scan_string(begin, word.size());
            return;
        }
        emit(TokenKind::Name, begin, pos_, line_, start_col, line_);
    }

    void scan_number() {
        std::size_t begin = pos_;
        int start_col = col();
        bool hex = src_.size() > pos_ + 1 && src_[pos_] == '0' && (src_[pos_ + 1] | 0x20) == 'x';
        while (pos_ < src_.size()) {
            unsigned char c = src_[pos_];
            if (is_name_char(c) || c == '.') {
                ++pos_;
            } else if ((c == '+' || c == '-') && !hex && pos_ > begin &&
                       (src_[pos_ - 1] | 0x20) == 'e') {
                ++pos_;
            } else {
                break;
            }
        }
        emit(TokenKind::Number, begin, pos_, line_, start_col, line_);
    }

    void scan_string(std::size_t begin, std::size_t prefix_len = 0) {
        int start_line = line_;
        int start_col = col();
        pos_ = begin + prefix_len;
        char quote = src_[pos_];
        bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
        pos_ += triple ? 3 : 1;
        while (true) {
            if (pos_ >= src_.size()) {
                throw SyntaxError(start_line, start_col,
                                  triple ? "unterminated triple-quoted string literal"
                                         : "unterminated string literal");
            }
            char c = src_[pos_];
            if (c == '\\') {
                ++pos_;
                if (pos_ < src_.size()) {
                    if (src_[pos_] == '\n') {
                        newline_char();
                    } else if (src_[pos_] == '\r') {
                        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
                        newline_char();
                    } else {
                        ++pos_;
                    }
                }
                continue;
            }
            if (c == '\n' || c == '\r') {
                if (!triple) throw SyntaxError(start_line, start_col, "unterminated string literal");
                if (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
                newline_char();
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    ++pos_;
                    break;
                }
                if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
                    pos_ += 3;
                    break;
                }
            }
            ++pos_;
        }
        emit(TokenKind::String, begin, pos_, start_line, start_col, line_);
    }

    void scan_operator() {
        std::size_t begin = pos_;
        int start_col = col();
        for (std::string_view op : kMultiCharOps) {
            if (src_.substr(pos_, op.size()) == op) {
                pos_ += op.size();
                emit(TokenKind::Op, begin, pos_, line_, start_col, line_);
                return;
            }
        }
        char c = src_[pos_];
        if (kSingleCharOps.find(c) == std::string_view::npos) {
            throw SyntaxError(line_, start_col, std::string("invalid character '") + c + "'");
        }
        if (c == '(' || c == '[' || c == '{') {
            brackets_.push_back({c, line_, start_col});
        } else if (c == ')' || c == ']' || c == '}') {
            char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
            if (brackets_.empty() || brackets_.back().ch != open) {
                throw SyntaxError(line_, start_col, std::string("unmatched '") + c + "'");
            }
            brackets_.pop_back();
        }
        ++pos_;
        emit(TokenKind::Op, begin, pos_, line_, start_col, line_);
    }

    void finish() {
        if (!brackets_.empty() && !opts_.lenient) {
            const auto& b = brackets_.back();
            throw SyntaxError(b.line, b.col, std::string("'") + b.ch + "' was never closed");
        }
        if (line_has_tokens_) emit(TokenKind::Newline, pos_, pos_, line_, col(), line_);
        line_has_tokens_ = false;
        if (opts_.track_indentation) {
            while (indents_.size() > 1) {
                indents_.pop_back();
                emit(TokenKind::Dedent, pos_, pos_, line_, col(), line_);
            }
        }
        emit(TokenKind::EndMarker, pos_, pos_, line_, col(), line_);
    }

    struct Bracket {
        char ch;
        int line;
        int col;
    };

    std::string_view src_;
    TokenizeOptions opts_;
    std::size_t pos_ = 0;
    std::size_t line_start_ = 0;
    int line_ = 1;
    bool line_has_tokens_ = false;
    std::vector<int> indents_{0};
    std::vector<Bracket> brackets_;
    std::vector<Token> out_;
};

// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(const std::vector<Token>& toks, std::vector<ImportBinding>& imports)
        : toks_(toks), imports_(imports) {}

    std::vector<Statement> parse_file() {
        std::vector<Statement> body;
        while (peek().kind != TokenKind::EndMarker) {
            if (peek().kind == TokenKind::Newline) {
                ++pos_;
                continue;
            }
            body.push_back(parse_statement());
        }
        return body;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    const Token& advance() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        if (t.kind != TokenKind::Newline && t.kind != TokenKind::Indent &&
            t.kind != TokenKind::Dedent && t.kind != TokenKind::EndMarker) {
            last_end_line_ = std::max(last_end_line_, t.end_line);
        }
        return t;
    }
    bool at_op(std::string_view op, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == TokenKind::Op && t.text == op;
    }
    bool at_name(std::string_view name, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == TokenKind::Name && t.text == name;
    }
    [[noreturn]] void fail(const Token& t, const std::string& msg) const {
        throw SyntaxError(t.line, t.col, msg);
    }
    void expect_op(std::string_view op, const std::string& msg) {
        if (!at_op(op)) fail(peek(), msg);
        advance();
    }

    // Skips a balanced bracket group starting at the current opening bracket.
    void skip_group() {
        int depth = 0;
        do {
            const Token& t = advance();
            if (t.kind == TokenKind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
            }
            if (t.kind == TokenKind::EndMarker) fail(t, "unexpected end of file");
        } while (depth > 0);
    }

    // Consumes a header up to (and including) its ':' at bracket depth 0.
    int consume_header_colon() {
        int lambdas = 0;
        while (true) {
            const Token& t = peek();
            if (t.kind == TokenKind::Newline || t.kind == TokenKind::EndMarker) {
                fail(t, "expected ':'");
            }
            if (t.kind == TokenKind::Op && (t.text == "(" || t.text == "[" || t.text == "{")) {
                skip_group();
                continue;
            }
            if (t.kind == TokenKind::Name && t.text == "lambda") ++lambdas;
            if (t.kind == TokenKind::Op && t.text == ":") {
                if (lambdas == 0) {
                    int line = t.line;
                    advance();
                    return line;
                }
                --lambdas;
            }
            advance();
        }
    }

    bool line_ends_with_colon_then_indent() const {
        std::size_t i = pos_;
        int depth = 0;
        while (i < toks_.size() && toks_[i].kind != TokenKind::Newline &&
               toks_[i].kind != TokenKind::EndMarker) {
            const Token& t = toks_[i];
            if (t.kind == TokenKind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
            }
            ++i;
        }
        if (i == pos_ || i + 1 >= toks_.size() || toks_[i].kind != TokenKind::Newline) return false;
        const Token& last = toks_[i - 1];
        return depth == 0 && last.kind == TokenKind::Op && last.text == ":" &&
               toks_[i + 1].kind == TokenKind::Indent;
    }

    Statement parse_statement() {
        const Token& first = peek();
        if (first.kind == TokenKind::Indent) fail(first, "unexpected indent");
        if (first.kind == TokenKind::Dedent) fail(first, "unexpected dedent");
        last_end_line_ = first.end_line;

        if (at_op("@")) return parse_decorated();
        if (at_name("def")) return parse_function(first.line, false);
        if (at_name("class")) return parse_class(first.line);
        if (at_name("async")) {
            if (at_name("def", 1)) {
                advance();
                return parse_function(first.line, true);
            }
            if (at_name("for", 1) || at_name("with", 1)) {
                advance();
                return parse_compound(first);
            }
        }
        static constexpr std::array<std::string_view, 9> kCompound = {
            "if", "elif", "else", "while", "for", "try", "except", "finally", "with"};
        if (first.kind == TokenKind::Name &&
            std::find(kCompound.begin(), kCompound.end(), first.text) != kCompound.end()) {
            return parse_compound(first);
        }
        if ((at_name("match") || at_name("case")) && line_ends_with_colon_then_indent()) {
            return parse_compound(first);
        }
        return parse_simple();
    }

    Statement parse_decorated() {
        int start = peek().line;
        while (at_op("@")) {
            while (peek().kind != TokenKind::Newline) {
                if (peek().kind == TokenKind::EndMarker) fail(peek(), "unexpected end of file");
                advance();
            }
            advance();  // Newline
        }
        if (at_name("def")) return parse_function(start, false);
        if (at_name("async") && at_name("def", 1)) {
            advance();
            return parse_function(start, true);
        }
        if (at_name("class")) return parse_class(start);
        fail(peek(), "expected function or class definition after decorator");
    }

    Statement parse_function(int start_line, bool is_async) {
        Statement s;
        s.kind = StatementKind::FunctionDef;
        s.is_async = is_async;
        s.start_line = start_line;
        s.header_line = peek().line;
        advance();  // def
        const Token& name = peek();
        if (name.kind != TokenKind::Name || is_keyword(name.text)) fail(name, "expected function name");
        s.name = std::string(name.text);
        advance();
        if (at_op("[")) skip_group();  // PEP 695 type parameters
        if (!at_op("(")) fail(peek(), "expected '(' after function name");
        skip_group();
        if (at_op("->")) {
            advance();
            if (at_op(":")) fail(peek(), "expected return annotation");
        }
        s.header_end_line = consume_header_colon();
        parse_suite(nullptr);
        s.end_line = last_end_line_;
        return s;
    }

    Statement parse_class(int start_line) {
        Statement s;
        s.kind = StatementKind::ClassDef;
        s.start_line = start_line;
        s.header_line = peek().line;
        advance();  // class
        const Token& name = peek();
        if (name.kind != TokenKind::Name || is_keyword(name.text)) fail(name, "expected class name");
        s.name = std::string(name.text);
        advance();
        if (at_op("[")) skip_group();
        if (at_op("(")) skip_group();
        if (!at_op(":")) fail(peek(), "expected ':'");
        s.header_end_line = peek().line;
        advance();
        parse_suite(&s.body);
        s.end_line = last_end_line_;
        return s;
    }

    Statement parse_compound(const Token& first) {
        Statement s;
        s.kind = StatementKind::Compound;
        s.start_line = first.line;
        s.header_line = first.line;
        s.header_end_line = consume_header_colon();
        parse_suite(nullptr);
        s.end_line = last_end_line_;
        return s;
    }

    // Parses the block after a header ':'. Statements are appended to `out`
    // when given; otherwise they are parsed for structure and imports only.
    void parse_suite(std::vector<Statement>* out) {
        std::vector<Statement> scratch;
        std::vector<Statement>& body = out ? *out : scratch;
        int saved_end = last_end_line_;
        if (peek().kind == TokenKind::Newline) {
            advance();
            if (peek().kind != TokenKind::Indent) fail(peek(), "expected an indented block");
            advance();
            while (peek().kind != TokenKind::Dedent && peek().kind != TokenKind::EndMarker) {
                if (peek().kind == TokenKind::Newline) {
                    advance();
                    continue;
                }
                int before = last_end_line_;
                body.push_back(parse_statement());
                last_end_line_ = std::max(before, body.back().end_line);
                saved_end = std::max(saved_end, last_end_line_);
            }
            if (peek().kind == TokenKind::Dedent) advance();
        } else {
            if (peek().kind == TokenKind::EndMarker) fail(peek(), "expected an indented block");
            body.push_back(parse_simple());
            saved_end = std::max(saved_end, body.back().end_line);
        }
        last_end_line_ = saved_end;
        if (!out) scratch.clear();
    }

    Statement parse_simple() {
        Statement s;
        s.kind = StatementKind::Simple;
        s.start_line = peek().line;
        s.header_line = peek().line;
        std::size_t begin = pos_;
        while (peek().kind != TokenKind::Newline) {
            const Token& t = peek();
            if (t.kind == TokenKind::EndMarker) break;
            if (t.kind == TokenKind::Indent || t.kind == TokenKind::Dedent) fail(t, "invalid syntax");
            advance();
        }
        std::size_t end = pos_;
        if (peek().kind == TokenKind::Newline) advance();
        s.end_line = last_end_line_;
        s.header_end_line = s.end_line;
        classify_simple(s, begin, end);
        return s;
    }

    void classify_simple(Statement& s, std::size_t begin, std::size_t end) {
        bool all_strings = true;
        for (std::size_t i = begin; i < end; ++i)
            if (toks_[i].kind != TokenKind::String) all_strings = false;
        if (all_strings && end > begin) {
            s.kind = StatementKind::Docstring;
            return;
        }
        bool all_imports = true;
        std::size_t seg = begin;
        for (std::size_t i = begin; i <= end; ++i) {
            bool boundary = i == end || (toks_[i].kind == TokenKind::Op && toks_[i].text == ";");
            if (!boundary) continue;
            if (i > seg) {
                const Token& head = toks_[seg];
                if (head.kind == TokenKind::Name && (head.text == "import" || head.text == "from")) {
                    parse_import(seg, i);
                } else {
                    all_imports = false;
                }
            }
            seg = i + 1;
        }
        if (all_imports) s.kind = StatementKind::Import;
    }

    // Reads a dotted name starting at toks_[i]; advances i past it.
    std::string read_dotted(std::size_t& i, std::size_t end) const {
        std::string name;
        if (i >= end || toks_[i].kind != TokenKind::Name) fail(toks_[std::min(i, end)], "expected module name");
        name = std::string(toks_[i].text);
        ++i;
        while (i + 1 < end && toks_[i].kind == TokenKind::Op && toks_[i].text == "." &&
               toks_[i + 1].kind == TokenKind::Name) {
            name += ".";
            name += toks_[i + 1].text;
            i += 2;
        }
        return name;
    }

    void parse_import(std::size_t i, std::size_t end) {
        const Token& head = toks_[i];
        ++i;
        if (head.text == "import") {
            while (i < end) {
                std::string module = read_dotted(i, end);
                ImportBinding b;
                b.module = module;
                if (i + 1 < end && toks_[i].kind == TokenKind::Name && toks_[i].text == "as") {
                    b.local_name = std::string(toks_[i + 1].text);
                    i += 2;
                } else {
                    b.local_name = module.substr(0, module.find('.'));
                    b.binds_top_package = module.find('.') != std::string::npos;
                }
                imports_.push_back(b);
                if (i < end && toks_[i].kind == TokenKind::Op && toks_[i].text == ",") {
                    ++i;
                } else if (i < end) {
                    fail(toks_[i], "invalid import statement");
                }
            }
            return;
        }
        // from-import
        int level = 0;
        while (i < end && toks_[i].kind == TokenKind::Op && (toks_[i].text == "." || toks_[i].text == "...")) {
            level += static_cast<int>(toks_[i].text.size());
            ++i;
        }
        std::string module;
        if (i < end && !(toks_[i].kind == TokenKind::Name && toks_[i].text == "import")) {
            module = read_dotted(i, end);
        }
        if (i >= end || toks_[i].kind != TokenKind::Name || toks_[i].text != "import") {
            fail(toks_[std::min(i, toks_.size() - 1)], "expected 'import'");
        }
        if (module.empty() && level == 0) fail(toks_[i], "expected module name");
        ++i;
        if (i < end && toks_[i].kind == TokenKind::Op && toks_[i].text == "*") return;
        bool paren = i < end && toks_[i].kind == TokenKind::Op && toks_[i].text == "(";
        if (paren) ++i;
        while (i < end) {
            if (toks_[i].kind == TokenKind::Op && toks_[i].text == ")") break;
            if (toks_[i].kind != TokenKind::Name) fail(toks_[i], "expected imported name");
            ImportBinding b;
            b.module = module;
            b.level = level;
            b.symbol = std::string(toks_[i].text);
            b.local_name = b.symbol;
            ++i;
            if (i + 1 < end && toks_[i].kind == TokenKind::Name && toks_[i].text == "as") {
                b.local_name = std::string(toks_[i + 1].text);
                i += 2;
            }
            imports_.push_back(b);
            if (i < end && toks_[i].kind == TokenKind::Op && toks_[i].text == ",") {
                ++i;
            } else if (i < end && !(toks_[i].kind == TokenKind::Op && toks_[i].text == ")")) {
                fail(toks_[i], "invalid import statement");
            }
        }
    }

    const std::vector<Token>& toks_;
    std::vector<ImportBinding>& imports_;
    std::size_t pos_ = 0;
    int last_end_line_ = 0;
};

int count_lines(std::string_view src) {
    if (src.empty()) return 0;
    int n = static_cast<int>(std::count(src.begin(), src.end(), '\n'));
    if (src.back() != '\n') ++n;
    return n;
}

}  // namespace

std::vector<Token> tokenize(std::string_view source, TokenizeOptions options) {
    return Tokenizer(source, options).run();
}

Module parse_module(std::string_view source) {
    Module m;
    m.line_count = count_lines(source);
    auto toks = tokenize(source);
    Parser parser(toks, m.imports);
    m.body = parser.parse_file();
    return m;
}

}  // namespace coret::python
