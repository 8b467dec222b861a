#pragma once

#include "seqscan/package.hpp"

#include <compare>
#include <string>
#include <string_view>
#include <vector>

// Structural view of a Python or JavaScript source file: just enough syntax
// to find declarations, imports, call expressions, attribute reads and
// string literals, each with its source position. The parsers are tolerant
// of anything they do not model but reject files that do not tokenize.
namespace seqscan::syntax {

struct Position {
    int line = 1;    // 1-based
    int column = 0;  // 0-based byte offset in the line

    auto operator<=>(const Position&) const = default;
};

struct Span {
    Position begin;
    Position end;  // inclusive

    bool contains(Position p) const { return begin <= p && p <= end; }
};

struct Definition {
    std::string name;         // simple name as written (`#x` for JS private names)
    std::string qualified;    // dotted path inside the file: `Cls.method`, `outer.inner`
    std::string owner_class;  // qualified name of the class `self`/`this` refers to
    Span span;
};

struct ClassDecl {
    std::string qualified;
    Span span;
};

// One imported module as written: `os.path`, `./lib/util`, `child_process`.
struct ImportRecord {
    std::string module;
    int level = 0;  // Python relative-import dots
    Position pos;
};

// A local name bound by an import statement.
struct Binding {
    std::string local;
    std::string module;
    int level = 0;
    std::string member;  // empty: the module object itself; "default": JS default export
};

struct CallSite {
    std::string callee;  // dotted chain, e.g. `requests.get`, `self.helper`
    Position pos;        // first token of the chain
    bool is_new = false;
    std::vector<std::string> string_args;  // literal positional arguments
};

struct NameRead {
    std::string chain;
    Position pos;
};

struct StringLiteral {
    std::string value;  // raw text between the quotes
    Position pos;
    bool bare_statement = false;  // docstring / directive
};

// JS `module.exports = { exported: local }` and `module.exports = local`.
struct ExportAlias {
    std::string exported;  // "default" for whole-module exports
    std::string local;
};

struct ParsedFile {
    bool ok = true;
    std::string error;
    int line_count = 0;
    Position end;
    std::vector<Definition> functions;  // source order
    std::vector<ClassDecl> classes;
    std::vector<ImportRecord> imports;
    std::vector<Binding> bindings;
    std::vector<CallSite> calls;
    std::vector<NameRead> reads;
    std::vector<StringLiteral> strings;
    std::vector<ExportAlias> exports;
};

ParsedFile parse_python(std::string_view source);
ParsedFile parse_javascript(std::string_view source);

// Dispatches on the file language; Language::Other yields an empty, ok file.
ParsedFile parse(const SourceFile& file);

}  // namespace seqscan::syntax
