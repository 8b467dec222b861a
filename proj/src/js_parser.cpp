#include "seqscan/syntax.hpp"

#include "seqscan/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace seqscan::syntax {

namespace {

enum class Kind { Name, Number, String, Template, Regex, Op };

struct Token {
    Kind kind;
    std::string text;
    Position pos;
    Position end;
    bool nl_before = false;
};

struct LexError {
    std::string message;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

const std::unordered_set<std::string>& reserved() {
    static const std::unordered_set<std::string> kWords = {
        "break",  "case",   "catch",  "class",    "const",  "continue", "debugger", "default",
        "delete", "do",     "else",   "export",   "extends", "finally", "for",      "function",
        "if",     "import", "in",     "instanceof", "let",  "new",      "return",   "switch",
        "throw",  "try",    "typeof", "var",      "void",   "while",    "with",     "yield",
        "await",  "null",   "true",   "false"};
    return kWords;
}

// Keywords after which a '/' starts a regular expression.
const std::unordered_set<std::string>& regex_after_words() {
    static const std::unordered_set<std::string> kWords = {
        "return", "typeof", "instanceof", "in", "of", "new", "delete", "void",
        "throw",  "case",   "do",         "else", "yield", "await"};
    return kWords;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {
        if (text::starts_with(src_, "\xEF\xBB\xBF")) i_ = 3;
        if (src_.substr(i_, 2) == "#!") {
            while (i_ < src_.size() && src_[i_] != '\n') ++i_;
        }
    }

    std::vector<Token> run() {
        loop(false);
        return std::move(tokens_);
    }

    Position end_position() const { return here(); }
    int line_count() const { return line_; }

private:
    Position here() const { return {line_, static_cast<int>(i_ - line_start_)}; }

    void newline_at(std::size_t next) {
        ++line_;
        line_start_ = next;
        nl_pending_ = true;
    }

    void push(Kind kind, std::string text, Position pos) {
        tokens_.push_back(Token{kind, std::move(text), pos, here(), nl_pending_});
        nl_pending_ = false;
    }

    void loop(bool template_expr) {
        int braces = 0;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            const char next = i_ + 1 < src_.size() ? src_[i_ + 1] : '\0';
            if (c == '\n') {
                ++i_;
                newline_at(i_);
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                ++i_;
                continue;
            }
            if (c == '\0') throw LexError{"NUL byte in source"};
            if (c == '/' && next == '/') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
                continue;
            }
            if (c == '/' && next == '*') {
                const auto close = src_.find("*/", i_ + 2);
                if (close == std::string_view::npos) throw LexError{"unterminated block comment"};
                for (std::size_t k = i_; k < close; ++k) {
                    if (src_[k] == '\n') newline_at(k + 1);
                }
                i_ = close + 2;
                continue;
            }
            if (c == '\'' || c == '"') {
                lex_string(c);
                continue;
            }
            if (c == '`') {
                lex_template();
                continue;
            }
            if (ident_start(static_cast<unsigned char>(c)) ||
                (c == '#' && ident_start(static_cast<unsigned char>(next)))) {
                lex_name();
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(next)))) {
                lex_number();
                continue;
            }
            if (c == '/' && regex_allowed()) {
                lex_regex();
                continue;
            }
            if (template_expr) {
                if (c == '{') ++braces;
                if (c == '}') {
                    if (braces == 0) {
                        ++i_;
                        return;
                    }
                    --braces;
                }
            }
            lex_op();
        }
        if (template_expr) throw LexError{"unterminated template literal"};
    }

    bool regex_allowed() const {
        if (tokens_.empty()) return true;
        const Token& prev = tokens_.back();
        switch (prev.kind) {
            case Kind::Number:
            case Kind::String:
            case Kind::Template:
            case Kind::Regex: return false;
            case Kind::Name: return regex_after_words().count(prev.text) > 0;
            case Kind::Op:
                return !(prev.text == ")" || prev.text == "]" || prev.text == "}" || prev.text == "++" ||
                         prev.text == "--");
        }
        return true;
    }

    void lex_name() {
        const Position pos = here();
        const std::size_t start = i_;
        ++i_;
        while (i_ < src_.size() && ident_char(static_cast<unsigned char>(src_[i_]))) ++i_;
        push(Kind::Name, std::string(src_.substr(start, i_ - start)), pos);
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

    void lex_string(char quote) {
        const Position pos = here();
        ++i_;
        const std::size_t body = i_;
        while (true) {
            if (i_ >= src_.size()) throw LexError{"unterminated string literal"};
            const char c = src_[i_];
            if (c == '\\') {
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '\n') newline_at(i_ + 2);
                i_ += 2;
                continue;
            }
            if (c == '\n') throw LexError{"unterminated string literal"};
            if (c == quote) break;
            ++i_;
        }
        const std::string content(src_.substr(body, i_ - body));
        ++i_;
        push(Kind::String, content, pos);
    }

    // The whole template (substitutions included, raw) becomes one token;
    // tokens of each `${...}` expression follow it.
    void lex_template() {
        const Position pos = here();
        const std::size_t slot = tokens_.size();
        push(Kind::Template, "", pos);
        ++i_;
        const std::size_t body = i_;
        while (true) {
            if (i_ >= src_.size()) throw LexError{"unterminated template literal"};
            const char c = src_[i_];
            if (c == '\\') {
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '\n') newline_at(i_ + 2);
                i_ += 2;
                continue;
            }
            if (c == '\n') {
                ++i_;
                ++line_;
                line_start_ = i_;
                continue;
            }
            if (c == '`') break;
            if (c == '$' && i_ + 1 < src_.size() && src_[i_ + 1] == '{') {
                i_ += 2;
                loop(true);
                continue;
            }
            ++i_;
        }
        tokens_[slot].text = std::string(src_.substr(body, i_ - body));
        ++i_;
        tokens_[slot].end = here();
    }

    void lex_regex() {
        const Position pos = here();
        const std::size_t start = i_;
        ++i_;
        bool in_class = false;
        while (true) {
            if (i_ >= src_.size() || src_[i_] == '\n') throw LexError{"unterminated regular expression"};
            const char c = src_[i_];
            if (c == '\\') {
                i_ += 2;
                continue;
            }
            if (c == '[') in_class = true;
            if (c == ']') in_class = false;
            if (c == '/' && !in_class) break;
            ++i_;
        }
        ++i_;
        while (i_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[i_]))) ++i_;
        push(Kind::Regex, std::string(src_.substr(start, i_ - start)), pos);
    }

    void lex_op() {
        static constexpr std::array<std::string_view, 39> kOps = {
            ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=", "=>", "==",
            "!=",   "<=",  ">=",  "&&",  "||",  "??",  "?.",  "++",  "--",  "+=",  "-=",   "*=", "/=",
            "%=",   "&=",  "|=",  "^=",  "**",  "<<",  ">>",  "(",   ")",   "[",   "]",    "{",  "}"};
        const Position pos = here();
        for (const auto op : kOps) {
            if (src_.substr(i_, op.size()) != op) continue;
            if (op == "?." && i_ + 2 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 2]))) {
                continue;
            }
            i_ += op.size();
            push(Kind::Op, std::string(op), pos);
            return;
        }
        push(Kind::Op, std::string(1, src_[i_++]), pos);
    }

    std::string_view src_;
    std::size_t i_ = 0;
    std::size_t line_start_ = 0;
    int line_ = 1;
    bool nl_pending_ = false;
    std::vector<Token> tokens_;
};

bool is_op(const Token& t, std::string_view op) { return t.kind == Kind::Op && t.text == op; }
bool is_word(const Token& t, std::string_view w) { return t.kind == Kind::Name && t.text == w; }
bool is_opener(const Token& t) { return is_op(t, "(") || is_op(t, "[") || is_op(t, "{"); }
bool is_closer(const Token& t) { return is_op(t, ")") || is_op(t, "]") || is_op(t, "}"); }

std::string normalize_binding(std::string chain) {
    if (chain == "module.exports" || chain == "exports") return "module.exports";
    for (std::string_view prefix : {"module.exports.", "exports.", "this."}) {
        if (text::starts_with(chain, prefix)) return chain.substr(prefix.size());
    }
    const auto proto = chain.find(".prototype.");
    if (proto != std::string::npos) chain.erase(proto, std::string_view(".prototype").size());
    return chain;
}

enum class FrameKind { Function, Class, Object, Block };

struct Frame {
    FrameKind kind = FrameKind::Block;
    std::string prefix;       // qualified prefix for definitions nested here
    std::string owner_class;  // what `this` refers to
    std::size_t def_index = 0;
};

struct NamedBinding {
    std::string name;
    std::size_t start = 0;  // token index where the binding begins
};

class Parser {
public:
    Parser(std::vector<Token> toks, ParsedFile& out) : t_(std::move(toks)), out_(out) {}

    void run() {
        match_brackets();
        structure();
        std::stable_sort(out_.functions.begin(), out_.functions.end(),
                         [](const Definition& a, const Definition& b) { return a.span.begin < b.span.begin; });
        references();
    }

private:
    void match_brackets() {
        match_.assign(t_.size(), 0);
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (is_opener(t_[i])) {
                stack.push_back(i);
            } else if (is_closer(t_[i])) {
                if (stack.empty()) throw LexError{"unbalanced closing bracket"};
                const std::size_t open = stack.back();
                stack.pop_back();
                const char want = t_[open].text[0] == '(' ? ')' : t_[open].text[0] == '[' ? ']' : '}';
                if (t_[i].text[0] != want) throw LexError{"mismatched brackets"};
                match_[open] = i;
                match_[i] = open;
            }
        }
        if (!stack.empty()) throw LexError{"unclosed bracket at end of file"};
    }

    bool valid(std::size_t i) const { return i < t_.size(); }

    // Dotted chain ending at index `last` (inclusive), read backwards.
    std::optional<NamedBinding> chain_ending_at(std::size_t last) const {
        if (!valid(last) || t_[last].kind != Kind::Name) return std::nullopt;
        std::string chain = t_[last].text;
        std::size_t start = last;
        while (start >= 2 && is_op(t_[start - 1], ".") && t_[start - 2].kind == Kind::Name) {
            chain = t_[start - 2].text + "." + chain;
            start -= 2;
        }
        return NamedBinding{chain, start};
    }

    // The name a function or class expression starting right after index k is bound to.
    std::optional<NamedBinding> binding_before(std::size_t k) const {
        if (!valid(k)) return std::nullopt;
        if (is_op(t_[k], "=") && k >= 1) {
            auto chain = chain_ending_at(k - 1);
            if (!chain) return std::nullopt;
            if (chain->start >= 1 && (is_word(t_[chain->start - 1], "const") || is_word(t_[chain->start - 1], "let") ||
                                      is_word(t_[chain->start - 1], "var"))) {
                chain->start -= 1;
            }
            chain->name = normalize_binding(chain->name);
            return chain;
        }
        if (is_op(t_[k], ":") && k >= 2 && (t_[k - 1].kind == Kind::Name || t_[k - 1].kind == Kind::String) &&
            (is_op(t_[k - 2], "{") || is_op(t_[k - 2], ","))) {
            return NamedBinding{t_[k - 1].text, k - 1};
        }
        return std::nullopt;
    }

    std::string qualify(const std::string& name) const {
        const std::string& prefix = frames_.empty() ? empty_ : frames_.back().prefix;
        return prefix.empty() ? name : prefix + "." + name;
    }

    const std::string& current_owner() const { return frames_.empty() ? empty_ : frames_.back().owner_class; }
    const std::string& current_prefix() const { return frames_.empty() ? empty_ : frames_.back().prefix; }
    bool in_class_body() const { return !frames_.empty() && frames_.back().kind == FrameKind::Class; }

    std::size_t add_function(const std::string& name, std::size_t start_tok, std::string owner) {
        Definition d;
        d.name = name.substr(name.rfind('.') == std::string::npos ? 0 : name.rfind('.') + 1);
        d.qualified = qualify(name);
        d.owner_class = std::move(owner);
        d.span.begin = t_[start_tok].pos;
        d.span.end = t_[start_tok].end;
        out_.functions.push_back(std::move(d));
        return out_.functions.size() - 1;
    }

    // Skips `async`, `static`, `get`, `set`, `*` modifiers backwards from k.
    std::size_t skip_modifiers_back(std::size_t k) const {
        while (valid(k) && (is_word(t_[k], "async") || is_word(t_[k], "static") || is_word(t_[k], "get") ||
                            is_word(t_[k], "set") || is_op(t_[k], "*"))) {
            if (k == 0) return static_cast<std::size_t>(-1);
            --k;
        }
        return k;
    }

    Frame classify_brace(std::size_t b) {
        Frame frame;
        frame.prefix = current_prefix();
        frame.owner_class = current_owner();
        if (auto it = class_bodies_.find(b); it != class_bodies_.end()) {
            frame.kind = FrameKind::Class;
            frame.prefix = qualify(it->second);
            frame.owner_class = frame.prefix;
            out_.classes.push_back(ClassDecl{frame.prefix, Span{t_[class_starts_[b]].pos, t_[b].pos}});
            class_index_[b] = out_.classes.size() - 1;
            return frame;
        }
        if (b == 0) return frame;
        const Token& prev = t_[b - 1];

        auto open_function = [&](const std::string& name, std::size_t start_tok, std::string owner) {
            frame.kind = FrameKind::Function;
            frame.def_index = add_function(name, start_tok, owner);
            frame.prefix = out_.functions[frame.def_index].qualified;
            frame.owner_class = std::move(owner);
        };

        if (is_op(prev, "=>")) {
            const std::size_t params = arrow_params_start(b - 1);
            if (auto bound = binding_before(params - 1); valid(params - 1) && bound) {
                open_function(bound->name, bound->start, current_owner());
                return frame;
            }
            frame.kind = FrameKind::Block;
            return frame;
        }
        if (is_op(prev, ")")) {
            const std::size_t open = match_[b - 1];
            if (open == 0) return frame;
            std::size_t k = open - 1;
            if (is_op(t_[k], "*")) {
                if (k == 0) return frame;
                --k;
            }
            if (is_word(t_[k], "function")) {
                std::size_t start = k;
                if (start >= 1 && is_word(t_[start - 1], "async")) --start;
                if (auto bound = start >= 1 ? binding_before(start - 1) : std::nullopt) {
                    open_function(bound->name, bound->start, current_owner());
                } else if (start >= 2 && is_word(t_[start - 1], "default") && is_word(t_[start - 2], "export")) {
                    open_function("module.exports", start, "");
                }
                return frame;
            }
            if (t_[k].kind == Kind::Name) {
                static const std::unordered_set<std::string> kBlockHeads = {"if", "for", "while", "switch",
                                                                           "catch", "with", "function"};
                if (kBlockHeads.count(t_[k].text)) return frame;
                const std::size_t before = k >= 1 ? k - 1 : static_cast<std::size_t>(-1);
                if (valid(before) && (is_word(t_[before], "function") ||
                                      (is_op(t_[before], "*") && before >= 1 && is_word(t_[before - 1], "function")))) {
                    std::size_t start = is_op(t_[before], "*") ? before - 1 : before;
                    if (start >= 1 && is_word(t_[start - 1], "async")) --start;
                    std::string name = t_[k].text;
                    if (auto bound = start >= 1 ? binding_before(start - 1) : std::nullopt) name = bound->name;
                    if (start >= 2 && is_word(t_[start - 1], "default") && is_word(t_[start - 2], "export")) {
                        out_.exports.push_back(ExportAlias{"default", name});
                    }
                    def_names_.insert(k);
                    open_function(name, start, in_class_body() ? current_owner() : current_owner());
                    return frame;
                }
                if (valid(before) && is_op(t_[before], ".")) return frame;  // call chain, e.g. `a.b() {` is invalid
                // Class method or object-literal shorthand method.
                std::size_t start = k;
                const std::size_t mod = skip_modifiers_back(before);
                if (valid(before) && mod != before) start = mod + 1;
                def_names_.insert(k);
                open_function(t_[k].text, start, current_owner());
                return frame;
            }
            return frame;
        }
        // Object literal: named when bound, e.g. `const api = {`.
        if (is_op(prev, "=") || is_op(prev, ":") || is_op(prev, "(") || is_op(prev, ",") || is_op(prev, "[") ||
            is_word(prev, "return") || is_op(prev, "?") || is_op(prev, "||") || is_op(prev, "??")) {
            frame.kind = FrameKind::Object;
            if (auto bound = binding_before(b - 1)) {
                if (bound->name != "module.exports") {
                    frame.prefix = qualify(bound->name);
                    frame.owner_class = frame.prefix;
                }
            }
        }
        return frame;
    }

    // Index of the first token of an arrow function's parameter list, given
    // the index of its `=>`.
    std::size_t arrow_params_start(std::size_t arrow) const {
        if (arrow == 0) return 0;
        std::size_t p = arrow - 1;
        if (is_op(t_[p], ")")) p = match_[p];
        if (p >= 1 && is_word(t_[p - 1], "async")) --p;
        return p;
    }

    void expression_arrow(std::size_t arrow) {
        const std::size_t params = arrow_params_start(arrow);
        if (params == 0) return;
        const auto bound = binding_before(params - 1);
        if (!bound) return;
        std::size_t j = arrow + 1;
        std::size_t last = arrow;
        while (valid(j)) {
            const Token& t = t_[j];
            if (is_closer(t) || is_op(t, ";") || is_op(t, ",")) break;
            if (j > arrow + 1 && t.nl_before) break;
            if (is_opener(t)) j = match_[j];
            last = j;
            ++j;
        }
        const std::size_t index = add_function(bound->name, bound->start, current_owner());
        out_.functions[index].span.end = t_[last].end;
        if (out_.functions[index].span.end.column > 0) out_.functions[index].span.end.column -= 1;
    }

    void note_class(std::size_t c) {
        if (c >= 1 && is_op(t_[c - 1], ".")) return;
        std::string name;
        std::size_t start = c;
        if (valid(c + 1) && t_[c + 1].kind == Kind::Name && !is_word(t_[c + 1], "extends")) {
            name = t_[c + 1].text;
            def_names_.insert(c + 1);
        }
        if (c >= 1) {
            if (auto bound = binding_before(c - 1)) {
                name = bound->name;
                start = bound->start;
            }
        }
        if (name.empty()) name = "<class>";
        std::size_t j = c + 1;
        while (valid(j) && !is_op(t_[j], "{")) {
            if (is_op(t_[j], "(") || is_op(t_[j], "[")) j = match_[j];
            ++j;
        }
        if (valid(j)) {
            class_bodies_[j] = name;
            class_starts_[j] = start;
        }
    }

    void structure() {
        for (std::size_t i = 0; i < t_.size(); ++i) {
            const Token& t = t_[i];
            if (is_word(t, "class")) {
                note_class(i);
            } else if (is_op(t, "=>") && !(valid(i + 1) && is_op(t_[i + 1], "{"))) {
                expression_arrow(i);
            } else if (is_op(t, "{")) {
                frames_.push_back(classify_brace(i));
            } else if (is_op(t, "}") && !frames_.empty()) {
                const Frame& f = frames_.back();
                if (f.kind == FrameKind::Function) {
                    out_.functions[f.def_index].span.end = t.pos;
                } else if (f.kind == FrameKind::Class) {
                    out_.classes[class_index_[match_[i]]].span.end = t.pos;
                }
                frames_.pop_back();
            }
        }
    }

    bool statement_start(std::size_t i) const {
        if (i == 0) return true;
        const Token& prev = t_[i - 1];
        return is_op(prev, ";") || is_op(prev, "{") || is_op(prev, "}") || t_[i].nl_before;
    }

    void es_import(std::size_t i) {
        std::size_t j = i + 1;
        std::vector<std::pair<std::string, std::string>> names;  // (member, local)
        if (valid(j) && is_word(t_[j], "type")) ++j;
        while (valid(j) && t_[j].kind != Kind::String && !is_op(t_[j], ";")) {
            if (is_op(t_[j], "*") && valid(j + 2) && is_word(t_[j + 1], "as")) {
                names.emplace_back("", t_[j + 2].text);
                j += 3;
            } else if (is_op(t_[j], "{")) {
                const std::size_t close = match_[j];
                for (std::size_t k = j + 1; k < close; ++k) {
                    if (t_[k].kind != Kind::Name && t_[k].kind != Kind::String) continue;
                    std::string member = t_[k].text;
                    std::string local = member;
                    if (k + 2 < close && is_word(t_[k + 1], "as")) {
                        local = t_[k + 2].text;
                        k += 2;
                    }
                    names.emplace_back(member, local);
                    while (k + 1 < close && !is_op(t_[k + 1], ",")) ++k;
                }
                j = close + 1;
            } else if (t_[j].kind == Kind::Name && !is_word(t_[j], "from")) {
                names.emplace_back("default", t_[j].text);
                ++j;
            } else {
                ++j;
            }
        }
        if (!valid(j) || t_[j].kind != Kind::String) return;
        const std::string& module = t_[j].text;
        out_.imports.push_back(ImportRecord{module, 0, t_[j].pos});
        for (auto& [member, local] : names) out_.bindings.push_back(Binding{local, module, 0, member});
        consumed_until_ = j;
    }

    void es_reexport(std::size_t i) {
        for (std::size_t j = i + 1; valid(j) && !is_op(t_[j], ";"); ++j) {
            if (j > i + 1 && t_[j].nl_before && !is_word(t_[j - 1], "from") && !is_op(t_[j - 1], ",")) break;
            if (is_word(t_[j], "from") && valid(j + 1) && t_[j + 1].kind == Kind::String) {
                out_.imports.push_back(ImportRecord{t_[j + 1].text, 0, t_[j + 1].pos});
                return;
            }
            if (is_opener(t_[j])) j = match_[j];
        }
    }

    void require_binding(std::size_t head, std::size_t close, const std::string& module) {
        if (head < 2 || !is_op(t_[head - 1], "=")) return;
        const Token& lhs = t_[head - 2];
        if (lhs.kind == Kind::Name && !(head >= 3 && is_op(t_[head - 3], "."))) {
            std::string member;
            if (valid(close + 2) && is_op(t_[close + 1], ".") && t_[close + 2].kind == Kind::Name) {
                member = t_[close + 2].text;
            }
            out_.bindings.push_back(Binding{lhs.text, module, 0, member});
            return;
        }
        if (is_op(lhs, "}")) {
            const std::size_t open = match_[head - 2];
            for (std::size_t k = open + 1; k < head - 2; ++k) {
                if (t_[k].kind != Kind::Name) continue;
                std::string member = t_[k].text;
                std::string local = member;
                if (k + 2 < head - 2 && is_op(t_[k + 1], ":") && t_[k + 2].kind == Kind::Name) {
                    local = t_[k + 2].text;
                    k += 2;
                }
                out_.bindings.push_back(Binding{local, module, 0, member});
                while (k + 1 < head - 2 && !is_op(t_[k + 1], ",")) {
                    ++k;
                    if (is_opener(t_[k])) k = match_[k];
                }
            }
        }
    }

    void module_exports(std::size_t eq, const std::string& target) {
        if (!valid(eq + 1)) return;
        const Token& rhs = t_[eq + 1];
        if (target == "module.exports" && is_op(rhs, "{")) {
            const std::size_t close = match_[eq + 1];
            for (std::size_t k = eq + 2; k < close; ++k) {
                if (t_[k].kind == Kind::Name || t_[k].kind == Kind::String) {
                    const std::string key = t_[k].text;
                    if (valid(k + 1) && (is_op(t_[k + 1], ",") || k + 1 == close)) {
                        out_.exports.push_back(ExportAlias{key, key});
                    } else if (valid(k + 2) && is_op(t_[k + 1], ":") && t_[k + 2].kind == Kind::Name &&
                               valid(k + 3) && (is_op(t_[k + 3], ",") || k + 3 == close)) {
                        out_.exports.push_back(ExportAlias{key, t_[k + 2].text});
                    }
                }
                // skip to the next top-level entry
                while (k < close && !is_op(t_[k], ",")) {
                    if (is_opener(t_[k])) k = match_[k];
                    ++k;
                }
            }
            return;
        }
        if (rhs.kind == Kind::Name && !reserved().count(rhs.text) &&
            (!valid(eq + 2) || is_op(t_[eq + 2], ";") || t_[eq + 2].nl_before || is_closer(t_[eq + 2]))) {
            out_.exports.push_back(ExportAlias{target == "module.exports" ? "default" : target, rhs.text});
        }
    }

    std::vector<std::string> string_args(std::size_t open) const {
        std::vector<std::string> args;
        const std::size_t close = match_[open];
        for (std::size_t k = open + 1; k < close; ++k) {
            if ((t_[k].kind == Kind::String || t_[k].kind == Kind::Template) &&
                (is_op(t_[k - 1], "(") || is_op(t_[k - 1], ",")) && (k + 1 == close || is_op(t_[k + 1], ","))) {
                args.push_back(t_[k].text);
            }
            if (is_opener(t_[k])) k = match_[k];
        }
        return args;
    }

    void references() {
        for (std::size_t i = 0; i < t_.size(); ++i) {
            const Token& t = t_[i];
            if (t.kind == Kind::String || t.kind == Kind::Template) {
                const bool bare = t.kind == Kind::String && statement_start(i) &&
                                  (!valid(i + 1) || is_op(t_[i + 1], ";") || t_[i + 1].nl_before);
                out_.strings.push_back(StringLiteral{t.text, t.pos, bare});
                continue;
            }
            if (t.kind != Kind::Name) continue;
            if (i > 0 && (is_op(t_[i - 1], ".") || is_op(t_[i - 1], "?."))) continue;
            if (is_word(t, "import") && statement_start(i) && !(valid(i + 1) && (is_op(t_[i + 1], "(") ||
                                                                                 is_op(t_[i + 1], ".")))) {
                es_import(i);
                if (consumed_until_ > i) {
                    // strings inside the import clause are module names, not literals
                    i = consumed_until_;
                }
                continue;
            }
            if (is_word(t, "export")) {
                es_reexport(i);
                continue;
            }
            if (def_names_.count(i)) continue;
            if ((is_word(t, "const") || is_word(t, "let") || is_word(t, "var")) && valid(i + 1) &&
                (is_op(t_[i + 1], "{") || is_op(t_[i + 1], "["))) {
                i = match_[i + 1];  // destructuring pattern declares names, it reads none
                continue;
            }
            if (reserved().count(t.text)) continue;

            // Dotted chain.
            std::string chain = t.text;
            std::size_t j = i + 1;
            while (valid(j + 1) && (is_op(t_[j], ".") || is_op(t_[j], "?.")) && t_[j + 1].kind == Kind::Name) {
                chain += "." + t_[j + 1].text;
                j += 2;
            }
            std::size_t paren = j;
            if (valid(j + 1) && is_op(t_[j], "?.") && is_op(t_[j + 1], "(")) paren = j + 1;

            if (valid(paren) && is_op(t_[paren], "(")) {
                CallSite call{chain, t.pos, i > 0 && is_word(t_[i - 1], "new"), string_args(paren)};
                if (chain == "require" && call.string_args.size() == 1 && valid(paren + 1) &&
                    t_[paren + 1].kind == Kind::String) {
                    out_.imports.push_back(ImportRecord{call.string_args[0], 0, t.pos});
                    require_binding(i, match_[paren], call.string_args[0]);
                }
                out_.calls.push_back(std::move(call));
            } else {
                const bool declared = i > 0 && (is_word(t_[i - 1], "const") || is_word(t_[i - 1], "let") ||
                                                is_word(t_[i - 1], "var") || is_word(t_[i - 1], "function"));
                const bool object_key = i > 0 && (is_op(t_[i - 1], "{") || is_op(t_[i - 1], ",")) && valid(j) &&
                                        is_op(t_[j], ":");
                if ((chain == "module.exports" || chain == "exports" || text::starts_with(chain, "module.exports.") ||
                     text::starts_with(chain, "exports.")) &&
                    valid(j) && is_op(t_[j], "=")) {
                    module_exports(j, normalize_binding(chain));
                } else if (!declared && !object_key) {
                    out_.reads.push_back(NameRead{chain, t.pos});
                }
            }
            i = j - 1;
        }
    }

    std::vector<Token> t_;
    ParsedFile& out_;
    std::vector<std::size_t> match_;
    std::vector<Frame> frames_;
    std::unordered_map<std::size_t, std::string> class_bodies_;
    std::unordered_map<std::size_t, std::size_t> class_starts_;
    std::unordered_map<std::size_t, std::size_t> class_index_;
    std::unordered_set<std::size_t> def_names_;
    std::size_t consumed_until_ = 0;
    const std::string empty_;
};

}  // namespace

ParsedFile parse_javascript(std::string_view source) {
    ParsedFile out;
    try {
        Lexer lexer(source);
        auto tokens = lexer.run();
        out.line_count = lexer.line_count();
        out.end = lexer.end_position();
        Parser(std::move(tokens), out).run();
    } catch (const LexError& e) {
        ParsedFile failed;
        failed.ok = false;
        failed.error = e.message;
        return failed;
    }
    return out;
}

}  // namespace seqscan::syntax
