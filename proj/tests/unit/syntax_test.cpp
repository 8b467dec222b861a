#include "seqscan/syntax.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace seqscan::syntax;

namespace {

const Definition* find_def(const ParsedFile& f, std::string_view qualified) {
    for (const auto& d : f.functions) {
        if (d.qualified == qualified) return &d;
    }
    return nullptr;
}

std::vector<std::string> callees(const ParsedFile& f) {
    std::vector<std::string> out;
    for (const auto& c : f.calls) out.push_back(c.callee);
    return out;
}

bool has_read(const ParsedFile& f, std::string_view chain) {
    return std::any_of(f.reads.begin(), f.reads.end(), [&](const NameRead& r) { return r.chain == chain; });
}

}  // namespace

TEST(PythonParser, FunctionsClassesAndSpans) {
    const auto f = parse_python(
        "import os\n"
        "\n"
        "def outer(a):\n"
        "    def inner():\n"
        "        return os.getcwd()\n"
        "    return inner()\n"
        "\n"
        "class Box:\n"
        "    def __init__(self):\n"
        "        self.v = 1\n"
        "    def __hide(self):\n"
        "        pass\n"
        "x = outer(2)\n");
    ASSERT_TRUE(f.ok) << f.error;
    ASSERT_EQ(f.functions.size(), 4u);
    const auto* outer = find_def(f, "outer");
    ASSERT_NE(outer, nullptr);
    EXPECT_EQ(outer->span.begin.line, 3);
    EXPECT_EQ(outer->span.end.line, 6);
    const auto* inner = find_def(f, "outer.inner");
    ASSERT_NE(inner, nullptr);
    EXPECT_EQ(inner->span.end.line, 5);
    const auto* init = find_def(f, "Box.__init__");
    ASSERT_NE(init, nullptr);
    EXPECT_EQ(init->owner_class, "Box");
    ASSERT_NE(find_def(f, "Box.__hide"), nullptr);
    ASSERT_EQ(f.classes.size(), 1u);
    EXPECT_EQ(f.classes[0].span.end.line, 12);
    EXPECT_EQ(callees(f), (std::vector<std::string>{"os.getcwd", "inner", "outer"}));
}

TEST(PythonParser, ImportsAndBindings) {
    const auto f = parse_python(
        "import os.path, sys as system\n"
        "from . import sibling\n"
        "from ..pkg.mod import a, b as c\n"
        "from m import *\n");
    ASSERT_TRUE(f.ok);
    ASSERT_EQ(f.imports.size(), 5u);
    EXPECT_EQ(f.imports[0].module, "os.path");
    EXPECT_EQ(f.imports[1].module, "sys");
    EXPECT_EQ(f.imports[2].level, 1);
    EXPECT_EQ(f.imports[3].module, "pkg.mod");
    EXPECT_EQ(f.imports[3].level, 2);
    bool saw_c = false, saw_os = false, saw_star = false, saw_sibling = false;
    for (const auto& b : f.bindings) {
        if (b.local == "sibling") saw_sibling = b.member == "sibling" && b.module.empty() && b.level == 1;
        if (b.local == "c") saw_c = b.member == "b" && b.module == "pkg.mod";
        if (b.local == "os") saw_os = b.module == "os" && b.member.empty();
        if (b.member == "*") saw_star = b.module == "m";
    }
    EXPECT_TRUE(saw_sibling);
    EXPECT_TRUE(saw_c);
    EXPECT_TRUE(saw_os);
    EXPECT_TRUE(saw_star);
}

TEST(PythonParser, StringsCallsAndReads) {
    const auto f = parse_python(
        "def f():\n"
        "    \"\"\"doc\n"
        "    string\"\"\"\n"
        "    key = os.environ['HOME']\n"
        "    requests.get('https://x.example/a', timeout=3)\n"
        "    s = b'raw' + r\"\\d\"\n");
    ASSERT_TRUE(f.ok) << f.error;
    ASSERT_EQ(f.strings.size(), 5u);
    EXPECT_TRUE(f.strings[0].bare_statement);
    EXPECT_FALSE(f.strings[1].bare_statement);
    EXPECT_EQ(f.strings[1].value, "HOME");
    EXPECT_EQ(f.strings[2].pos.line, 5);
    EXPECT_TRUE(has_read(f, "os.environ"));
    EXPECT_FALSE(has_read(f, "timeout"));
    ASSERT_EQ(f.calls.size(), 1u);
    EXPECT_EQ(f.calls[0].callee, "requests.get");
    EXPECT_EQ(f.calls[0].pos.line, 5);
    EXPECT_EQ(f.calls[0].pos.column, 4);
    EXPECT_EQ(f.calls[0].string_args, std::vector<std::string>{"https://x.example/a"});
}

TEST(PythonParser, ContinuationLinesKeepPhysicalPositions) {
    const auto f = parse_python(
        "x = call(1,\n"
        "         other(2))\n"
        "y = a \\\n"
        "    + b()\n");
    ASSERT_TRUE(f.ok);
    ASSERT_EQ(f.calls.size(), 3u);
    EXPECT_EQ(f.calls[1].pos.line, 2);
    EXPECT_EQ(f.calls[2].pos.line, 4);
}

TEST(PythonParser, RejectsUntokenizableInput) {
    EXPECT_FALSE(parse_python("x = 'unterminated\n").ok);
    EXPECT_FALSE(parse_python("f(1, 2\n").ok);
    EXPECT_FALSE(parse_python(std::string("a = 1\0", 6)).ok);
    EXPECT_TRUE(parse_python("").ok);
}

TEST(JavaScriptParser, RequireAndEsImports) {
    const auto f = parse_javascript(
        "const http = require('http');\n"
        "const { exec, spawn: sp } = require('child_process');\n"
        "const readFile = require('fs').readFile;\n"
        "import def, { a as b } from './lib/x.js';\n"
        "import * as ns from 'os';\n");
    ASSERT_TRUE(f.ok) << f.error;
    ASSERT_EQ(f.imports.size(), 5u);
    EXPECT_EQ(f.imports[0].module, "http");
    EXPECT_EQ(f.imports[3].module, "./lib/x.js");
    auto binding = [&](std::string_view local) -> const Binding* {
        for (const auto& b : f.bindings) {
            if (b.local == local) return &b;
        }
        return nullptr;
    };
    ASSERT_NE(binding("http"), nullptr);
    EXPECT_EQ(binding("sp")->member, "spawn");
    EXPECT_EQ(binding("exec")->member, "exec");
    EXPECT_EQ(binding("readFile")->member, "readFile");
    EXPECT_EQ(binding("def")->member, "default");
    EXPECT_EQ(binding("b")->member, "a");
    EXPECT_EQ(binding("ns")->member, "");
    // Module names of ES imports are not ordinary string literals.
    EXPECT_EQ(f.strings.size(), 3u);
}

TEST(JavaScriptParser, DefinitionsOfEveryShape) {
    const auto f = parse_javascript(
        "function top(a) { return a; }\n"
        "const arrow = (x) => { helper(x); };\n"
        "const short = x => x * 2;\n"
        "module.exports.exported = function () {};\n"
        "Foo.prototype.bar = function () {};\n"
        "class Widget extends Base {\n"
        "  constructor() { super(); this.#init(); }\n"
        "  #init() {}\n"
        "  static make() { return new Widget(); }\n"
        "}\n"
        "const api = {\n"
        "  send(x) { this.log(x); },\n"
        "  log: function (x) {},\n"
        "};\n");
    ASSERT_TRUE(f.ok) << f.error;
    for (const char* q : {"top", "arrow", "short", "exported", "Foo.bar", "Widget.constructor", "Widget.#init",
                          "Widget.make", "api.send", "api.log"}) {
        EXPECT_NE(find_def(f, q), nullptr) << q;
    }
    EXPECT_EQ(find_def(f, "Widget.#init")->owner_class, "Widget");
    EXPECT_EQ(find_def(f, "api.send")->owner_class, "api");
    EXPECT_EQ(find_def(f, "short")->span.begin.line, 3);
    EXPECT_EQ(find_def(f, "short")->span.end.line, 3);
    EXPECT_EQ(find_def(f, "Widget.constructor")->span.begin.line, 7);
    const auto calls = callees(f);
    for (const char* c : {"helper", "super", "this.#init", "Widget", "this.log"}) {
        EXPECT_NE(std::find(calls.begin(), calls.end(), c), calls.end()) << c;
    }
    for (const auto& c : f.calls) {
        if (c.callee == "Widget") EXPECT_TRUE(c.is_new);
    }
}

TEST(JavaScriptParser, ExportsAliases) {
    const auto f = parse_javascript(
        "function run() {}\n"
        "function stop() {}\n"
        "module.exports = { run, halt: stop };\n");
    ASSERT_TRUE(f.ok);
    ASSERT_EQ(f.exports.size(), 2u);
    EXPECT_EQ(f.exports[0].exported, "run");
    EXPECT_EQ(f.exports[1].exported, "halt");
    EXPECT_EQ(f.exports[1].local, "stop");
    const auto g = parse_javascript("function main() {}\nmodule.exports = main;\n");
    ASSERT_EQ(g.exports.size(), 1u);
    EXPECT_EQ(g.exports[0].exported, "default");
}

TEST(JavaScriptParser, TemplatesRegexAndComments) {
    const auto f = parse_javascript(
        "#!/usr/bin/env node\n"
        "'use strict';\n"
        "// require('hidden')\n"
        "/* fetch('x') */\n"
        "const re = /https?:\\/\\/[a-z]+/g;\n"
        "const a = b / c / d;\n"
        "const t = `http://${host(1)}/p`;\n"
        "process.env.HOME;\n");
    ASSERT_TRUE(f.ok) << f.error;
    EXPECT_EQ(callees(f), std::vector<std::string>{"host"});
    ASSERT_GE(f.strings.size(), 2u);
    EXPECT_TRUE(f.strings[0].bare_statement);
    EXPECT_EQ(f.strings[1].value, "http://${host(1)}/p");
    EXPECT_EQ(f.calls[0].pos.line, 7);
    EXPECT_TRUE(has_read(f, "process.env.HOME"));
    EXPECT_TRUE(f.imports.empty());
}

TEST(JavaScriptParser, ObjectKeysAndDeclarationsAreNotReads) {
    const auto f = parse_javascript("const options = { host: h, port: 80 };\n");
    ASSERT_TRUE(f.ok);
    EXPECT_FALSE(has_read(f, "host"));
    EXPECT_FALSE(has_read(f, "options"));
    EXPECT_TRUE(has_read(f, "h"));
}

TEST(JavaScriptParser, RejectsUntokenizableInput) {
    EXPECT_FALSE(parse_javascript("const s = 'open;\n").ok);
    EXPECT_FALSE(parse_javascript("function f( {\n").ok);
    EXPECT_FALSE(parse_javascript("const t = `abc\n").ok);
    EXPECT_TRUE(parse_javascript("").ok);
}

TEST(Parse, DispatchesOnLanguage) {
    seqscan::SourceFile other{"README.md", seqscan::Language::Other, "# hi("};
    EXPECT_TRUE(parse(other).ok);
    seqscan::SourceFile py{"a.py", seqscan::Language::Python, "f()\n"};
    EXPECT_EQ(parse(py).calls.size(), 1u);
}
