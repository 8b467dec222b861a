#include "seqscan/syntax.hpp"

#include "seqscan/text.hpp"

#include <array>
#include <cctype>
#include <optional>
#include <unordered_set>

namespace seqscan::syntax {

namespace {

enum class Kind { Name, Number, String, Op };

struct Token {
    Kind kind;
    std::string text;  // string tokens: content without prefix or quotes
    Position pos;
    Position end;
};

struct LogicalLine {
    int indent = 0;
    std::vector<Token> tokens;
};

struct LexError {
    std::string message;
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view p) {
    if (p.size() > 2) return false;
    const std::string lower = text::to_lower(p);
    static const std::unordered_set<std::string> kPrefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    return kPrefixes.count(lower) > 0;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<LogicalLine> run() {
        while (i_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (!begin_line()) continue;
            }
            const char c = src_[i_];
            if (c == '\n') {
                newline();
                continue;
            }
            if (c == '\\' && i_ + 1 < src_.size() && (src_[i_ + 1] == '\n' || src_[i_ + 1] == '\r')) {
                i_ += (src_[i_ + 1] == '\r' && i_ + 2 < src_.size() && src_[i_ + 2] == '\n') ? 3 : 2;
                ++line_;
                line_start_ = i_;
                continue;
            }
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
                ++i_;
                continue;
            }
            if (c == '\0') throw LexError{"NUL byte in source"};
            if (c == '\'' || c == '"') {
                lex_string(i_);
                continue;
            }
            if (is_ident_start(static_cast<unsigned char>(c))) {
                lex_name();
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
                lex_number();
                continue;
            }
            lex_op();
        }
        if (depth_ != 0) throw LexError{"unclosed bracket at end of file"};
        flush_line();
        return std::move(lines_);
    }

    Position end_position() const { return {line_, static_cast<int>(i_ - line_start_)}; }
    int line_count() const { return line_; }

private:
    Position here() const { return {line_, static_cast<int>(i_ - line_start_)}; }

    // Measures indentation; returns false if the line is blank or comment-only
    // (the caller then continues from the consumed position).
    bool begin_line() {
        int width = 0;
        while (i_ < src_.size() && (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\f')) {
            width = src_[i_] == '\t' ? (width / 8 + 1) * 8 : width + 1;
            ++i_;
        }
        if (i_ >= src_.size()) return false;
        const char c = src_[i_];
        if (c == '\n' || c == '\r' || c == '#') {
            while (i_ < src_.size() && src_[i_] != '\n') ++i_;
            if (i_ < src_.size()) newline();
            return false;
        }
        if (c == '\\' && i_ + 1 < src_.size() && src_[i_ + 1] == '\n') {
            return true;  // continuation on an otherwise empty line
        }
        current_.indent = width;
        at_line_start_ = false;
        return true;
    }

    void newline() {
        ++i_;
        ++line_;
        line_start_ = i_;
        if (depth_ == 0) {
            flush_line();
            at_line_start_ = true;
        }
    }

    void flush_line() {
        if (!current_.tokens.empty()) lines_.push_back(std::move(current_));
        current_ = LogicalLine{};
    }

    void push(Kind kind, std::string text, Position pos) {
        current_.tokens.push_back(Token{kind, std::move(text), pos, here()});
    }

    void lex_name() {
        const Position pos = here();
        const std::size_t start = i_;
        while (i_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[i_]))) ++i_;
        const std::string_view word = src_.substr(start, i_ - start);
        if (i_ < src_.size() && (src_[i_] == '\'' || src_[i_] == '"') && is_string_prefix(word)) {
            lex_string(start);
            return;
        }
        push(Kind::Name, std::string(word), pos);
    }

    void lex_number() {
        const Position pos = here();
        const std::size_t start = i_;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                ++i_;
            } else if ((c == '+' || c == '-') && (src_[i_ - 1] == 'e' || src_[i_ - 1] == 'E') &&
                       !(src_[start] == '0' && start + 1 < src_.size() &&
                         (src_[start + 1] == 'x' || src_[start + 1] == 'X'))) {
                ++i_;
            } else {
                break;
            }
        }
        push(Kind::Number, std::string(src_.substr(start, i_ - start)), pos);
    }

    // `start` points at the prefix (if any); i_ points at the opening quote.
    void lex_string(std::size_t start) {
        const Position pos{line_, static_cast<int>(start - line_start_)};
        const char quote = src_[i_];
        const bool triple = i_ + 2 < src_.size() && src_[i_ + 1] == quote && src_[i_ + 2] == quote;
        i_ += triple ? 3 : 1;
        const std::size_t body = i_;
        while (true) {
            if (i_ >= src_.size()) throw LexError{"unterminated string literal"};
            const char c = src_[i_];
            if (c == '\\') {
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '\n') {
                    ++line_;
                    line_start_ = i_ + 2;
                }
                i_ += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw LexError{"unterminated string literal"};
                ++i_;
                ++line_;
                line_start_ = i_;
                continue;
            }
            if (c == quote) {
                if (!triple) break;
                if (i_ + 2 < src_.size() && src_[i_ + 1] == quote && src_[i_ + 2] == quote) break;
            }
            ++i_;
        }
        const std::string content(src_.substr(body, i_ - body));
        i_ += triple ? 3 : 1;
        push(Kind::String, content, pos);
    }

    void lex_op() {
        static constexpr std::array<std::string_view, 27> kMulti = {
            "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<",
            ">>",  "+=",  "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "@=", "<>", "~=", "!"};
        const Position pos = here();
        for (const auto op : kMulti) {
            if (op.size() > 1 && src_.substr(i_, op.size()) == op) {
                i_ += op.size();
                push(Kind::Op, std::string(op), pos);
                return;
            }
        }
        const char c = src_[i_++];
        if (c == '(' || c == '[' || c == '{') {
            ++depth_;
        } else if (c == ')' || c == ']' || c == '}') {
            if (depth_ == 0) throw LexError{"unbalanced closing bracket"};
            --depth_;
        }
        push(Kind::Op, std::string(1, c), pos);
    }

    std::string_view src_;
    std::size_t i_ = 0;
    std::size_t line_start_ = 0;
    int line_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    LogicalLine current_;
    std::vector<LogicalLine> lines_;
};

const std::unordered_set<std::string>& keywords() {
    static const std::unordered_set<std::string> kKeywords = {
        "False", "None",   "True",  "and",    "as",       "assert", "async",  "await",
        "break", "class",  "continue", "def", "del",      "elif",   "else",   "except",
        "finally", "for",  "from",  "global", "if",       "import", "in",     "is",
        "lambda", "nonlocal", "not", "or",    "pass",     "raise",  "return", "try",
        "while", "with",   "yield"};
    return kKeywords;
}

bool is_op(const Token& t, std::string_view op) { return t.kind == Kind::Op && t.text == op; }
bool is_name(const Token& t, std::string_view name) { return t.kind == Kind::Name && t.text == name; }

struct Scope {
    bool is_class = false;
    std::string qualified;
    std::string owner_class;
    int indent = 0;
    std::size_t index = 0;  // into functions or classes
};

class Parser {
public:
    explicit Parser(ParsedFile& out) : out_(out) {}

    void run(const std::vector<LogicalLine>& lines, Position file_end) {
        Position last_end{1, 0};
        for (const auto& line : lines) {
            while (!scopes_.empty() && line.indent <= scopes_.back().indent) close_scope(last_end);
            process_line(line);
            last_end = line.tokens.back().end;
            if (last_end.column > 0) last_end.column -= 1;
        }
        (void)file_end;
        while (!scopes_.empty()) close_scope(last_end);
    }

private:
    void close_scope(Position end) {
        const Scope& s = scopes_.back();
        if (s.is_class) {
            out_.classes[s.index].span.end = end;
        } else {
            out_.functions[s.index].span.end = end;
        }
        scopes_.pop_back();
    }

    std::string prefix() const { return scopes_.empty() ? "" : scopes_.back().qualified + "."; }

    void process_line(const LogicalLine& line) {
        const auto& toks = line.tokens;
        std::size_t first = 0;
        if (is_name(toks[0], "async") && toks.size() > 1 && is_name(toks[1], "def")) first = 1;
        std::size_t def_name = toks.size();  // index of a declared name, excluded from reads

        if ((is_name(toks[first], "def") || is_name(toks[first], "class")) && first + 1 < toks.size() &&
            toks[first + 1].kind == Kind::Name) {
            const bool is_class = toks[first].text == "class";
            const std::string& name = toks[first + 1].text;
            Scope scope;
            scope.is_class = is_class;
            scope.qualified = prefix() + name;
            scope.indent = line.indent;
            if (is_class) {
                scope.owner_class = scope.qualified;
                scope.index = out_.classes.size();
                out_.classes.push_back(ClassDecl{scope.qualified, Span{toks[0].pos, toks.back().end}});
            } else {
                if (!scopes_.empty()) {
                    scope.owner_class =
                        scopes_.back().is_class ? scopes_.back().qualified : scopes_.back().owner_class;
                }
                scope.index = out_.functions.size();
                out_.functions.push_back(
                    Definition{name, scope.qualified, scope.owner_class, Span{toks[0].pos, toks.back().end}});
            }
            scopes_.push_back(std::move(scope));
            def_name = first + 1;
        }

        // Split into simple statements on top-level ';'.
        std::size_t start = 0;
        int depth = 0;
        for (std::size_t j = 0; j <= toks.size(); ++j) {
            if (j < toks.size()) {
                const Token& t = toks[j];
                if (t.kind == Kind::Op && (t.text == "(" || t.text == "[" || t.text == "{")) ++depth;
                if (t.kind == Kind::Op && (t.text == ")" || t.text == "]" || t.text == "}")) --depth;
                if (!(depth == 0 && is_op(t, ";"))) continue;
            }
            if (j > start) statement(toks, start, j, def_name);
            start = j + 1;
        }
    }

    void statement(const std::vector<Token>& toks, std::size_t b, std::size_t e, std::size_t def_name) {
        if (is_name(toks[b], "import")) {
            import_statement(toks, b + 1, e);
            return;
        }
        if (is_name(toks[b], "from")) {
            from_statement(toks, b + 1, e);
            return;
        }
        bool all_strings = true;
        for (std::size_t j = b; j < e; ++j) {
            if (toks[j].kind != Kind::String) all_strings = false;
        }
        scan_expressions(toks, b, e, def_name, all_strings);
    }

    // Reads a dotted name starting at j; returns the index past it.
    static std::size_t dotted(const std::vector<Token>& toks, std::size_t j, std::size_t e, std::string& out) {
        out.clear();
        if (j >= e || toks[j].kind != Kind::Name) return j;
        out = toks[j].text;
        ++j;
        while (j + 1 < e && is_op(toks[j], ".") && toks[j + 1].kind == Kind::Name) {
            out += "." + toks[j + 1].text;
            j += 2;
        }
        return j;
    }

    void import_statement(const std::vector<Token>& toks, std::size_t j, std::size_t e) {
        while (j < e) {
            const Position pos = toks[j].pos;
            std::string module;
            j = dotted(toks, j, e, module);
            if (module.empty()) {
                ++j;
                continue;
            }
            out_.imports.push_back(ImportRecord{module, 0, pos});
            if (j + 1 < e && is_name(toks[j], "as") && toks[j + 1].kind == Kind::Name) {
                out_.bindings.push_back(Binding{toks[j + 1].text, module, 0, ""});
                j += 2;
            } else {
                const std::string top = module.substr(0, module.find('.'));
                out_.bindings.push_back(Binding{top, top, 0, ""});
            }
            while (j < e && !is_op(toks[j], ",")) ++j;
            ++j;
        }
    }

    void from_statement(const std::vector<Token>& toks, std::size_t j, std::size_t e) {
        int level = 0;
        const Position from_pos = j < e ? toks[j].pos : Position{};
        while (j < e && toks[j].kind == Kind::Op && (toks[j].text == "." || toks[j].text == "...")) {
            level += static_cast<int>(toks[j].text.size());
            ++j;
        }
        std::string module;
        const Position pos = j < e && toks[j].kind == Kind::Name && !is_name(toks[j], "import") ? toks[j].pos
                                                                                             : from_pos;
        if (j < e && !is_name(toks[j], "import")) j = dotted(toks, j, e, module);
        while (j < e && !is_name(toks[j], "import")) ++j;
        ++j;
        out_.imports.push_back(ImportRecord{module, level, pos});
        while (j < e) {
            const Token& t = toks[j];
            if (is_op(t, "*")) {
                out_.bindings.push_back(Binding{"*", module, level, "*"});
                ++j;
                continue;
            }
            if (t.kind != Kind::Name) {
                ++j;
                continue;
            }
            std::string local = t.text;
            const std::string member = t.text;
            ++j;
            if (j + 1 < e && is_name(toks[j], "as") && toks[j + 1].kind == Kind::Name) {
                local = toks[j + 1].text;
                j += 2;
            }
            out_.bindings.push_back(Binding{local, module, level, member});
        }
    }

    void scan_expressions(const std::vector<Token>& toks, std::size_t b, std::size_t e, std::size_t def_name,
                          bool bare_strings) {
        int depth = 0;
        for (std::size_t j = b; j < e; ++j) {
            const Token& t = toks[j];
            if (t.kind == Kind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
                continue;
            }
            if (t.kind == Kind::String) {
                out_.strings.push_back(StringLiteral{t.text, t.pos, bare_strings});
                continue;
            }
            if (t.kind != Kind::Name || j == def_name || keywords().count(t.text)) continue;
            if (j > b && is_op(toks[j - 1], ".")) continue;

            std::string chain;
            const std::size_t after = dotted(toks, j, e, chain);
            if (after < e && is_op(toks[after], "(")) {
                CallSite call{chain, t.pos, false, string_args(toks, after, e)};
                out_.calls.push_back(std::move(call));
            } else if (!(depth > 0 && after < e && is_op(toks[after], "="))) {
                out_.reads.push_back(NameRead{chain, t.pos});
            }
            j = after - 1;
        }
    }

    // Literal positional arguments of the call whose '(' is at `open`.
    static std::vector<std::string> string_args(const std::vector<Token>& toks, std::size_t open, std::size_t e) {
        std::vector<std::string> args;
        int depth = 0;
        for (std::size_t j = open; j < e; ++j) {
            const Token& t = toks[j];
            if (t.kind == Kind::Op && (t.text == "(" || t.text == "[" || t.text == "{")) ++depth;
            if (t.kind == Kind::Op && (t.text == ")" || t.text == "]" || t.text == "}")) {
                if (--depth == 0) break;
            }
            if (depth == 1 && t.kind == Kind::String && (is_op(toks[j - 1], "(") || is_op(toks[j - 1], ",")) &&
                j + 1 < e && (is_op(toks[j + 1], ",") || is_op(toks[j + 1], ")"))) {
                args.push_back(t.text);
            }
        }
        return args;
    }

    ParsedFile& out_;
    std::vector<Scope> scopes_;
};

}  // namespace

ParsedFile parse_python(std::string_view source) {
    ParsedFile out;
    Lexer lexer(source);
    std::vector<LogicalLine> lines;
    try {
        lines = lexer.run();
    } catch (const LexError& e) {
        out.ok = false;
        out.error = e.message;
        return out;
    }
    out.line_count = lexer.line_count();
    out.end = lexer.end_position();
    Parser(out).run(lines, out.end);
    return out;
}

ParsedFile parse(const SourceFile& file) {
    switch (file.language) {
        case Language::Python: return parse_python(file.content);
        case Language::JavaScript: return parse_javascript(file.content);
        case Language::Other: break;
    }
    return ParsedFile{};
}

}  // namespace seqscan::syntax
