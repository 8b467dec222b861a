#include "seqscan/features.hpp"

#include "seqscan/error.hpp"
#include "seqscan/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

namespace seqscan {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<std::string_view, kFeatureCount> kCodes = {
    "R1", "R2", "R3", "R4", "R5", "D1", "D2", "D3", "E1", "E2", "E3", "E4", "P1", "P2", "P3", "P4"};

constexpr std::array<std::string_view, kFeatureCount> kDescriptions = {
    "import operating system module",
    "use operating system module call",
    "import file system module",
    "use file system module call",
    "read sensitive information",
    "import network module",
    "use network module call",
    "use URL",
    "import encoding module",
    "use encoding module call",
    "use base64 string",
    "use long string",
    "import process module",
    "use process module call",
    "use bash script",
    "evaluate code at run-time",
};

constexpr std::array kImportIds = {FeatureId::R1, FeatureId::R3, FeatureId::D1, FeatureId::E1, FeatureId::P1};
constexpr std::array kCallIds = {FeatureId::R2, FeatureId::R4, FeatureId::R5, FeatureId::D2,
                                 FeatureId::E2, FeatureId::P2, FeatureId::P4};

// Tie-break rank for call categories; higher wins.
int call_rank(FeatureId id) {
    switch (id) {
        case FeatureId::P4: return 7;
        case FeatureId::P2: return 6;
        case FeatureId::D2: return 5;
        case FeatureId::E2: return 4;
        case FeatureId::R5: return 3;
        case FeatureId::R4: return 2;
        case FeatureId::R2: return 1;
        default: return 0;
    }
}

constexpr const char* kDefaultTables = R"json({
  "format": "seqscan-category-tables",
  "version": 1,
  "url_pattern": "(https?|ftp)://[A-Za-z0-9\\[\\]_~%-]",
  "base64_min_length": 20,
  "long_string_threshold": 64,
  "bash_patterns": [
    "\\b(python[23]?|node|sh|bash)\\s+[^\\s]+\\.(py|js|sh)\\b",
    "\\b(wget|curl)\\s+(-[^\\s]+\\s+)*(https?|ftp)://",
    "\\|\\s*(ba)?sh\\b",
    "\\bchmod\\s+(\\+x|[0-7]{3,4})\\s",
    "/bin/(ba)?sh\\b",
    "\\bpowershell(\\.exe)?\\s+-",
    "\\bnc\\s+-e\\s",
    "\\brm\\s+-rf\\s",
    "\\bcmd(\\.exe)?\\s+/c\\s"
  ],
  "sensitive_literal_patterns": [
    "~/\\.ssh",
    "\\.ssh/",
    "\\bid_(rsa|dsa|ecdsa|ed25519)\\b",
    "\\.aws/credentials",
    "\\.npmrc",
    "\\.pypirc",
    "\\.git-credentials",
    "\\.netrc",
    "/etc/(passwd|shadow)",
    "\\.(bash|zsh)_history",
    "Local Storage[/\\\\]leveldb",
    "\\.kube/config",
    "\\.docker/config\\.json",
    "\\bwallet\\.dat\\b",
    "^\\s*(whoami|hostname|pwd|id|ifconfig|ipconfig|systeminfo|uname(\\s+-[a-zA-Z]+)?)\\s*$"
  ],
  "languages": {
    "python": {
      "modules": {
        "R1": ["os", "platform", "sys", "getpass"],
        "R3": ["shutil", "pathlib", "glob", "tempfile", "io"],
        "D1": ["requests", "urllib", "urllib2", "urllib3", "http.client", "socket", "ftplib", "smtplib"],
        "E1": ["base64", "codecs", "binascii", "marshal", "zlib"],
        "P1": ["subprocess", "multiprocessing", "ctypes"]
      },
      "calls": {
        "R2": ["os", "platform", "sys", "getpass"],
        "R4": ["os.path", "os.makedirs", "os.mkdir", "os.remove", "os.unlink", "os.rmdir", "os.rename",
               "os.listdir", "os.walk", "os.scandir", "os.chmod", "os.stat", "open", "io", "shutil",
               "pathlib", "glob", "tempfile"],
        "R5": ["os.environ", "os.getenv", "os.getcwd", "os.getlogin", "os.uname", "os.name",
               "os.path.expanduser", "getpass.getuser", "getpass.getpass", "socket.gethostname",
               "socket.gethostbyname", "platform.system", "platform.machine", "platform.node",
               "platform.platform", "platform.architecture", "platform.uname", "platform.processor",
               "platform.release", "platform.version", "sys.platform"],
        "D2": ["requests", "urllib", "urllib2", "urllib3", "http.client", "socket", "ftplib", "smtplib"],
        "E2": ["base64", "codecs", "binascii", "marshal", "zlib"],
        "P2": ["subprocess", "multiprocessing", "ctypes", "os.system", "os.popen", "os.exec*", "os.spawn*",
               "os.posix_spawn*", "os.startfile", "os.fork"],
        "P4": ["eval", "exec", "execfile", "compile"]
      },
      "encoding_argument_calls": [],
      "encoding_argument_values": []
    },
    "javascript": {
      "modules": {
        "R1": ["os"],
        "R3": ["fs", "path", "glob"],
        "D1": ["http", "https", "net", "dgram", "dns", "axios", "node-fetch", "request"],
        "E1": ["crypto", "buffer"],
        "P1": ["child_process", "worker_threads"]
      },
      "calls": {
        "R2": ["os", "process"],
        "R4": ["fs", "path", "glob"],
        "R5": ["process.env", "process.platform", "process.arch", "process.version", "process.versions",
               "process.cwd", "os.hostname", "os.userInfo", "os.homedir", "os.platform", "os.arch", "os.type",
               "os.release", "os.networkInterfaces"],
        "D2": ["http", "https", "net", "dgram", "dns", "axios", "node-fetch", "request", "fetch",
               "XMLHttpRequest"],
        "E2": ["atob", "btoa", "crypto"],
        "P2": ["child_process", "worker_threads"],
        "P4": ["eval", "Function", "vm.runInContext", "vm.runInNewContext", "vm.runInThisContext", "vm.Script",
               "vm.compileFunction"]
      },
      "encoding_argument_calls": ["Buffer.from"],
      "encoding_argument_values": ["base64", "base64url", "hex"]
    }
  }
})json";

std::regex compile_alternation(const std::vector<std::string>& patterns, const char* what) {
    std::string joined;
    for (const auto& p : patterns) {
        try {
            std::regex check(p, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw Error(ErrorKind::ConfigInvalid, std::string("invalid ") + what + " pattern '" + p + "': " + e.what());
        }
        if (!joined.empty()) joined += '|';
        joined += "(?:" + p + ")";
    }
    return std::regex(joined.empty() ? "$^" : joined, std::regex::ECMAScript | std::regex::optimize);
}

std::vector<std::string> string_list(const json& node, const std::string& where) {
    if (!node.is_array()) throw Error(ErrorKind::ConfigInvalid, where + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : node) {
        if (!item.is_string()) throw Error(ErrorKind::ConfigInvalid, where + " must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::map<FeatureId, std::vector<std::string>> id_table(const json& node, const std::string& where,
                                                        const auto& allowed) {
    if (!node.is_object()) throw Error(ErrorKind::ConfigInvalid, where + " must be an object");
    std::map<FeatureId, std::vector<std::string>> out;
    for (const auto& [key, value] : node.items()) {
        const auto id = parse_feature_id(key);
        if (!id || std::find(allowed.begin(), allowed.end(), *id) == allowed.end()) {
            throw Error(ErrorKind::ConfigInvalid, where + ": unexpected feature id '" + key + "'");
        }
        out[*id] = string_list(value, where + "." + key);
    }
    return out;
}

LanguageTables language_tables(const json& node, const std::string& where) {
    if (!node.is_object()) throw Error(ErrorKind::ConfigInvalid, where + " must be an object");
    LanguageTables t;
    t.modules = id_table(node.at("modules"), where + ".modules", kImportIds);
    t.calls = id_table(node.at("calls"), where + ".calls", kCallIds);
    t.encoding_argument_calls = string_list(node.at("encoding_argument_calls"), where + ".encoding_argument_calls");
    t.encoding_argument_values =
        string_list(node.at("encoding_argument_values"), where + ".encoding_argument_values");
    return t;
}

json language_json(const LanguageTables& t) {
    json modules = json::object();
    for (const auto& [id, names] : t.modules) modules[std::string(code(id))] = names;
    json calls = json::object();
    for (const auto& [id, names] : t.calls) calls[std::string(code(id))] = names;
    return json{{"modules", modules},
                {"calls", calls},
                {"encoding_argument_calls", t.encoding_argument_calls},
                {"encoding_argument_values", t.encoding_argument_values}};
}

// Specificity of `pattern` against `name`, or -1 when it does not match.
// Exact-style patterns score 2*len+1, wildcards 2*len, so equal-length
// exact patterns win.
int pattern_score(std::string_view pattern, std::string_view name) {
    if (text::ends_with(pattern, "*")) {
        const auto prefix = pattern.substr(0, pattern.size() - 1);
        return text::starts_with(name, prefix) ? static_cast<int>(prefix.size()) * 2 : -1;
    }
    if (name == pattern) return static_cast<int>(pattern.size()) * 2 + 1;
    if (name.size() > pattern.size() && text::starts_with(name, pattern) && name[pattern.size()] == '.') {
        return static_cast<int>(pattern.size()) * 2 + 1;
    }
    return -1;
}

int best_score(const std::vector<std::string>& patterns, std::string_view name) {
    int best = -1;
    for (const auto& p : patterns) best = std::max(best, pattern_score(p, name));
    return best;
}

// JS module specifiers use '/' for subpaths; tables use dots.
std::string normalize_module(std::string_view module, Language language) {
    std::string out(module);
    if (language == Language::JavaScript) {
        if (text::starts_with(out, "node:")) out.erase(0, 5);
        std::replace(out.begin(), out.end(), '/', '.');
    }
    return out;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

std::size_t owner_index(const std::vector<MethodRef>& methods, syntax::Position pos) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < methods.size(); ++k) {
        if (methods[k].span.begin > pos) break;
        if (methods[k].span.contains(pos)) best = k;
    }
    return best;
}

}  // namespace

std::string_view code(FeatureId id) { return kCodes[static_cast<std::size_t>(id)]; }

std::string_view description(FeatureId id) { return kDescriptions[static_cast<std::size_t>(id)]; }

std::optional<FeatureId> parse_feature_id(std::string_view s) {
    for (std::size_t i = 0; i < kCodes.size(); ++i) {
        if (kCodes[i] == s) return static_cast<FeatureId>(i);
    }
    return std::nullopt;
}

const CategoryTable& CategoryTable::defaults() {
    static const CategoryTable kDefaults = from_json("{}");
    return kDefaults;
}

std::string CategoryTable::default_json() { return json::parse(kDefaultTables).dump(2) + "\n"; }

CategoryTable CategoryTable::from_json(std::string_view doc) {
    json patch;
    try {
        patch = json::parse(doc);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("category tables: ") + e.what());
    }
    if (!patch.is_object()) throw Error(ErrorKind::ConfigInvalid, "category tables must be a JSON object");
    json merged = json::parse(kDefaultTables);
    merged.merge_patch(patch);

    CategoryTable t;
    try {
        if (merged.at("version") != kVersion) {
            throw Error(ErrorKind::ConfigInvalid,
                        "unsupported category table version " + merged.at("version").dump());
        }
        t.url_pattern = merged.at("url_pattern").get<std::string>();
        for (const char* key : {"base64_min_length", "long_string_threshold"}) {
            if (!merged.at(key).is_number_unsigned()) {
                throw Error(ErrorKind::ConfigInvalid, std::string("category tables: ") + key + " must be a positive integer");
            }
        }
        t.base64_min_length = merged.at("base64_min_length").get<std::size_t>();
        t.long_string_threshold = merged.at("long_string_threshold").get<std::size_t>();
        t.bash_patterns = string_list(merged.at("bash_patterns"), "bash_patterns");
        t.sensitive_literal_patterns = string_list(merged.at("sensitive_literal_patterns"), "sensitive_literal_patterns");
        const auto& languages = merged.at("languages");
        t.python = language_tables(languages.at("python"), "languages.python");
        t.javascript = language_tables(languages.at("javascript"), "languages.javascript");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("category tables: ") + e.what());
    }
    if (t.base64_min_length < 4 || t.long_string_threshold == 0) {
        throw Error(ErrorKind::ConfigInvalid, "category tables: length thresholds out of range");
    }
    t.compile();
    return t;
}

CategoryTable CategoryTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read category tables: " + path.string());
    const std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(doc);
}

std::string CategoryTable::to_json() const {
    json doc{{"format", "seqscan-category-tables"},
             {"version", kVersion},
             {"url_pattern", url_pattern},
             {"base64_min_length", base64_min_length},
             {"long_string_threshold", long_string_threshold},
             {"bash_patterns", bash_patterns},
             {"sensitive_literal_patterns", sensitive_literal_patterns},
             {"languages", {{"python", language_json(python)}, {"javascript", language_json(javascript)}}}};
    return doc.dump(2) + "\n";
}

void CategoryTable::compile() {
    try {
        url_rx_ = std::regex(url_pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("invalid url pattern: ") + e.what());
    }
    bash_rx_ = compile_alternation(bash_patterns, "bash");
    sensitive_rx_ = compile_alternation(sensitive_literal_patterns, "sensitive literal");
    has_bash_ = !bash_patterns.empty();
    has_sensitive_ = !sensitive_literal_patterns.empty();
}

const LanguageTables& CategoryTable::language(Language l) const {
    return l == Language::JavaScript ? javascript : python;
}

bool CategoryTable::matches_url(std::string_view s) const {
    return !url_pattern.empty() && std::regex_search(s.begin(), s.end(), url_rx_);
}

bool CategoryTable::matches_bash(std::string_view s) const {
    return has_bash_ && std::regex_search(s.begin(), s.end(), bash_rx_);
}

bool CategoryTable::matches_sensitive_literal(std::string_view s) const {
    return has_sensitive_ && std::regex_search(s.begin(), s.end(), sensitive_rx_);
}

bool is_base64_literal(std::string_view s, std::size_t min_length) {
    if (s.size() < min_length || s.size() % 4 != 0) return false;
    std::size_t padding = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '=') {
            ++padding;
            continue;
        }
        if (padding > 0) return false;  // data after padding
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/')) return false;
    }
    if (padding > 2) return false;
    return true;
}

std::vector<FeatureId> classify_string_literal(std::string_view text, const CategoryTable& tables) {
    std::vector<FeatureId> ids;
    if (text.find("://") != std::string_view::npos && tables.matches_url(text)) ids.push_back(FeatureId::D3);
    if (is_base64_literal(text, tables.base64_min_length)) ids.push_back(FeatureId::E3);
    if (utf8_length(text) >= tables.long_string_threshold) ids.push_back(FeatureId::E4);
    if (tables.matches_bash(text)) ids.push_back(FeatureId::P3);
    return ids;
}

std::optional<FeatureId> match_import(std::string_view module_name, Language language, const CategoryTable& tables) {
    const std::string module = normalize_module(module_name, language);
    const auto& sets = tables.language(language).modules;
    for (const FeatureId id : kImportIds) {
        const auto it = sets.find(id);
        if (it == sets.end()) continue;
        for (const auto& entry : it->second) {
            if (pattern_score(entry, module) >= 0) return id;
        }
    }
    return std::nullopt;
}

std::optional<FeatureId> match_call(std::string_view name, Language language, const CategoryTable& tables) {
    std::optional<FeatureId> best;
    int best_spec = -1;
    for (const auto& [id, patterns] : tables.language(language).calls) {
        const int spec = best_score(patterns, name);
        if (spec < 0) continue;
        if (spec > best_spec || (spec == best_spec && call_rank(id) > call_rank(*best))) {
            best = id;
            best_spec = spec;
        }
    }
    return best;
}

bool is_sensitive_read(std::string_view name, Language language, const CategoryTable& tables) {
    const auto& calls = tables.language(language).calls;
    const auto it = calls.find(FeatureId::R5);
    return it != calls.end() && best_score(it->second, name) >= 0;
}

std::string expand_name(std::string_view name, const std::vector<syntax::Binding>& bindings, Language language) {
    const auto dot = name.find('.');
    const std::string_view head = name.substr(0, dot);
    const std::string_view rest = dot == std::string_view::npos ? std::string_view() : name.substr(dot);
    // Later bindings shadow earlier ones.
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it) {
        if (it->local != head || it->level != 0 || it->member == "*") continue;
        if (language == Language::JavaScript && (text::starts_with(it->module, ".") || text::starts_with(it->module, "/"))) {
            return std::string(name);
        }
        std::string base = normalize_module(it->module, language);
        if (!it->member.empty() && it->member != "default") base += "." + it->member;
        return base + std::string(rest);
    }
    return std::string(name);
}

std::vector<FeatureInstance> extract_features(const SourceFile& file, const syntax::ParsedFile& parsed,
                                              const std::vector<MethodRef>& methods, const CategoryTable& tables,
                                              const InPackageCall& in_package) {
    std::vector<FeatureInstance> out;
    if (!parsed.ok || methods.empty()) return out;
    const Language language = file.language;
    const auto& lang = tables.language(language);
    auto add = [&](syntax::Position pos, FeatureId id) {
        out.push_back(FeatureInstance{owner_index(methods, pos), pos.line, pos.column, id});
    };

    for (const auto& imp : parsed.imports) {
        if (imp.level != 0 || imp.module.empty()) continue;
        if (language == Language::JavaScript && (text::starts_with(imp.module, ".") || text::starts_with(imp.module, "/"))) {
            continue;
        }
        auto id = match_import(imp.module, language, tables);
        // `from http import client` names the submodule http.client.
        for (const auto& b : parsed.bindings) {
            if (id || language != Language::Python) break;
            if (b.level == 0 && b.module == imp.module && !b.member.empty()) {
                id = match_import(imp.module + "." + b.member, language, tables);
            }
        }
        if (id) add(imp.pos, *id);
    }

    for (const auto& call : parsed.calls) {
        if (language == Language::JavaScript && call.callee == "require") continue;
        if (in_package && in_package(owner_index(methods, call.pos), call)) continue;
        const std::string name = expand_name(call.callee, parsed.bindings, language);
        auto id = match_call(name, language, tables);
        if (!id && std::find(lang.encoding_argument_calls.begin(), lang.encoding_argument_calls.end(), name) !=
                       lang.encoding_argument_calls.end()) {
            for (const auto& arg : call.string_args) {
                if (std::find(lang.encoding_argument_values.begin(), lang.encoding_argument_values.end(), arg) !=
                    lang.encoding_argument_values.end()) {
                    id = FeatureId::E2;
                    break;
                }
            }
        }
        if (id) add(call.pos, *id);
    }

    for (const auto& read : parsed.reads) {
        if (is_sensitive_read(expand_name(read.chain, parsed.bindings, language), language, tables)) {
            add(read.pos, FeatureId::R5);
        }
    }

    for (const auto& literal : parsed.strings) {
        if (literal.bare_statement) continue;
        if (tables.matches_sensitive_literal(literal.value)) add(literal.pos, FeatureId::R5);
        for (const FeatureId id : classify_string_literal(literal.value, tables)) add(literal.pos, id);
    }

    std::stable_sort(out.begin(), out.end(), [](const FeatureInstance& a, const FeatureInstance& b) {
        if (a.line != b.line) return a.line < b.line;
        if (a.column != b.column) return a.column < b.column;
        return a.id < b.id;
    });
    return out;
}

std::vector<FeatureInstance> extract_features(const SourceFile& file, const std::vector<MethodRef>& methods,
                                              const CategoryTable& tables, std::vector<std::string>* warnings) {
    const auto parsed = syntax::parse(file);
    if (!parsed.ok) {
        if (warnings) warnings->push_back("ParseFailure: " + file.path + ": " + parsed.error);
        return {};
    }
    return extract_features(file, parsed, methods, tables);
}

}  // namespace seqscan
