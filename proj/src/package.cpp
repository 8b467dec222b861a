#include "seqscan/package.hpp"

#include "seqscan/error.hpp"
#include "seqscan/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>

namespace fs = std::filesystem;

namespace seqscan {

std::string_view to_string(Ecosystem e) { return e == Ecosystem::PyPI ? "pypi" : "npm"; }

std::string_view to_string(Language l) {
    switch (l) {
        case Language::Python: return "python";
        case Language::JavaScript: return "javascript";
        case Language::Other: return "other";
    }
    return "other";
}

std::optional<Ecosystem> parse_ecosystem(std::string_view s) {
    const std::string lower = text::to_lower(s);
    if (lower == "pypi") return Ecosystem::PyPI;
    if (lower == "npm") return Ecosystem::NPM;
    return std::nullopt;
}

Language language_for_path(std::string_view path) {
    if (text::ends_with(path, ".py")) return Language::Python;
    if (text::ends_with(path, ".js") || text::ends_with(path, ".cjs") || text::ends_with(path, ".mjs")) {
        return Language::JavaScript;
    }
    return Language::Other;
}

Language analyzed_language(Ecosystem e) {
    return e == Ecosystem::PyPI ? Language::Python : Language::JavaScript;
}

TempDir::TempDir(std::string_view prefix) {
    std::string templ = (fs::temp_directory_path() / (std::string(prefix) + "XXXXXX")).string();
    if (::mkdtemp(templ.data()) == nullptr) {
        throw Error(ErrorKind::IoFailure, "cannot create temporary directory");
    }
    path_ = templ;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

const SourceFile* Package::find_source(std::string_view path) const {
    const auto it = std::lower_bound(sources.begin(), sources.end(), path,
                                     [](const SourceFile& f, std::string_view p) { return f.path < p; });
    return (it != sources.end() && it->path == path) ? &*it : nullptr;
}

namespace {

std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool is_regular(const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(fs::symlink_status(p, ec));
}

// Parses RFC 822 style "Key: value" headers (PKG-INFO, METADATA).
std::map<std::string, std::string> parse_metadata_headers(const std::string& content) {
    std::map<std::string, std::string> out;
    for (const auto& line : text::split(content, '\n')) {
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) break;  // body starts
        const auto colon = line.find(':');
        if (colon == std::string::npos || line.front() == ' ' || line.front() == '\t') continue;
        const std::string key = line.substr(0, colon);
        if (!out.count(key)) out[key] = std::string(text::trim(std::string_view(line).substr(colon + 1)));
    }
    return out;
}

std::vector<std::string> shell_words(std::string_view command) {
    std::string spaced;
    for (std::size_t i = 0; i < command.size(); ++i) {
        const char c = command[i];
        if (c == ';' || c == '|' || c == '&' || c == '(' || c == ')') {
            spaced.push_back(' ');
        } else if (c == '"' || c == '\'') {
            continue;
        } else {
            spaced.push_back(c);
        }
    }
    return text::split_whitespace(spaced);
}

bool looks_like_script(std::string_view word) {
    return text::ends_with(word, ".js") || text::ends_with(word, ".cjs") || text::ends_with(word, ".mjs");
}

// Script files referenced by an install hook command, in command order.
std::vector<std::string> hook_script_paths(std::string_view command, const fs::path& root) {
    std::vector<std::string> out;
    const auto words = shell_words(command);
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::vector<std::string> candidates;
        const bool after_node = i > 0 && (words[i - 1] == "node" || words[i - 1] == "nodejs");
        if (looks_like_script(words[i])) {
            candidates.push_back(words[i]);
        } else if (after_node && !words[i].empty() && words[i].front() != '-') {
            candidates = {words[i], words[i] + ".js", words[i] + "/index.js"};
        }
        for (const auto& c : candidates) {
            const auto rel = archive::sanitize_entry_path(c);
            if (rel && is_regular(root / *rel)) {
                if (std::find(out.begin(), out.end(), *rel) == out.end()) out.push_back(*rel);
                break;
            }
        }
    }
    return out;
}

Manifest parse_npm_manifest(const fs::path& root, std::vector<std::string>* warnings) {
    Manifest m;
    const auto content = read_file(root / "package.json");
    if (!content) return m;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(*content);
    } catch (const nlohmann::json::parse_error& e) {
        if (warnings) warnings->push_back(std::string("ManifestUnparseable: package.json: ") + e.what());
        return m;
    }
    if (!doc.is_object()) {
        if (warnings) warnings->push_back("ManifestUnparseable: package.json is not an object");
        return m;
    }
    for (const auto& [key, value] : doc.items()) {
        if (value.is_string()) m.raw[key] = value.get<std::string>();
    }
    const auto scripts = doc.find("scripts");
    if (scripts == doc.end() || !scripts->is_object()) return m;
    for (const auto& [key, value] : scripts->items()) {
        if (value.is_string()) m.raw["scripts." + key] = value.get<std::string>();
    }
    for (const char* hook : {"preinstall", "install", "postinstall"}) {
        const auto it = scripts->find(hook);
        if (it == scripts->end() || !it->is_string()) continue;
        for (auto& p : hook_script_paths(it->get<std::string>(), root)) {
            if (std::find(m.install_script_paths.begin(), m.install_script_paths.end(), p) ==
                m.install_script_paths.end()) {
                m.install_script_paths.push_back(std::move(p));
            }
        }
    }
    return m;
}

Manifest parse_pypi_manifest(const fs::path& root) {
    Manifest m;
    if (auto pkg_info = read_file(root / "PKG-INFO")) {
        m.raw = parse_metadata_headers(*pkg_info);
    } else {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(root, ec)) {
            const auto name = entry.path().filename().string();
            if (entry.is_directory() && text::ends_with(name, ".dist-info")) {
                if (auto meta = read_file(entry.path() / "METADATA")) m.raw = parse_metadata_headers(*meta);
                break;
            }
        }
    }
    if (is_regular(root / "setup.py")) {
        m.install_script_paths.push_back("setup.py");
        if (!m.raw.count("Name") || !m.raw.count("Version")) {
            if (auto setup = read_file(root / "setup.py")) {
                static const std::regex name_rx(R"(\bname\s*=\s*['"]([^'"]+)['"])");
                static const std::regex version_rx(R"(\bversion\s*=\s*['"]([^'"]+)['"])");
                std::smatch match;
                if (!m.raw.count("Name") && std::regex_search(*setup, match, name_rx)) m.raw["Name"] = match[1];
                if (!m.raw.count("Version") && std::regex_search(*setup, match, version_rx)) {
                    m.raw["Version"] = match[1];
                }
            }
        }
    }
    return m;
}

constexpr std::array kManifestNames = {"setup.py", "PKG-INFO", "pyproject.toml", "setup.cfg", "package.json"};

// Registry archives usually wrap everything in one directory (`name-1.0/`,
// `package/`); the package root is that directory when it holds a manifest.
fs::path choose_root(const fs::path& extracted, const std::vector<std::string>& files) {
    std::set<std::string> tops;
    for (const auto& f : files) {
        const auto slash = f.find('/');
        if (slash == std::string::npos) return extracted;
        tops.insert(f.substr(0, slash));
    }
    if (tops.size() != 1) return extracted;
    const fs::path candidate = extracted / *tops.begin();
    for (const char* name : kManifestNames) {
        if (is_regular(candidate / name)) return candidate;
    }
    return extracted;
}

std::vector<SourceFile> enumerate_sources(const fs::path& root, Ecosystem ecosystem) {
    std::vector<SourceFile> out;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root, ec); it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (ec) break;
        if (!is_regular(it->path())) continue;
        SourceFile f;
        f.path = fs::relative(it->path(), root).generic_string();
        f.language = language_for_path(f.path);
        if (f.language == analyzed_language(ecosystem)) {
            if (auto raw = read_file(it->path())) f.content = text::decode_utf8_lossy(*raw);
        }
        out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end(), [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    return out;
}

// "name-1.2.3.tar.gz" / "name-1.2.3-py3-none-any.whl" -> (name, version).
std::pair<std::string, std::string> identity_from_filename(const fs::path& p) {
    std::string stem = p.filename().string();
    for (const char* ext : {".tar.gz", ".tgz", ".tar", ".zip", ".whl"}) {
        if (text::ends_with(text::to_lower(stem), ext)) {
            stem.resize(stem.size() - std::string_view(ext).size());
            break;
        }
    }
    if (text::ends_with(text::to_lower(p.filename().string()), ".whl")) {
        const auto parts = text::split(stem, '-');
        if (parts.size() >= 2) return {parts[0], parts[1]};
    }
    for (std::size_t i = stem.size(); i-- > 1;) {
        if (stem[i - 1] == '-' && std::isdigit(static_cast<unsigned char>(stem[i]))) {
            return {stem.substr(0, i - 1), stem.substr(i)};
        }
    }
    return {stem, ""};
}

void fill_identity(Package& pkg, const fs::path& source) {
    const auto& raw = pkg.manifest.raw;
    const char* name_key = pkg.ecosystem == Ecosystem::NPM ? "name" : "Name";
    const char* version_key = pkg.ecosystem == Ecosystem::NPM ? "version" : "Version";
    if (auto it = raw.find(name_key); it != raw.end()) pkg.name = it->second;
    if (auto it = raw.find(version_key); it != raw.end()) pkg.version = it->second;
    if (pkg.name.empty() || pkg.version.empty()) {
        auto [name, version] = identity_from_filename(source);
        if (pkg.name.empty()) pkg.name = name;
        if (pkg.version.empty()) pkg.version = version;
    }
    if (pkg.version.empty()) pkg.version = "0";
}

}  // namespace

Manifest parse_manifest(Ecosystem ecosystem, const fs::path& root, std::vector<std::string>* warnings) {
    return ecosystem == Ecosystem::NPM ? parse_npm_manifest(root, warnings) : parse_pypi_manifest(root);
}

Package load_package(const fs::path& archive_path, Ecosystem ecosystem, const LoadOptions& options) {
    Package pkg;
    pkg.ecosystem = ecosystem;
    std::error_code ec;
    if (fs::is_directory(archive_path, ec)) {
        pkg.root = fs::absolute(archive_path);
    } else {
        if (!fs::exists(archive_path, ec)) {
            throw Error(ErrorKind::ArchiveCorrupt, "no such archive: " + archive_path.string());
        }
        auto storage = std::make_shared<TempDir>();
        const fs::path dest = storage->path() / "x";
        fs::create_directories(dest);
        const auto extracted = archive::extract(archive_path, dest, {options.max_total_bytes});
        pkg.warnings = extracted.warnings;
        pkg.root = choose_root(dest, extracted.files);
        pkg.storage = std::move(storage);
    }
    pkg.manifest = parse_manifest(ecosystem, pkg.root, &pkg.warnings);
    pkg.sources = enumerate_sources(pkg.root, ecosystem);
    fill_identity(pkg, archive_path);
    return pkg;
}

}  // namespace seqscan
