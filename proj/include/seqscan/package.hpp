#pragma once

#include "seqscan/archive.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan {

enum class Ecosystem { PyPI, NPM };

enum class Language { Python, JavaScript, Other };

std::string_view to_string(Ecosystem e);
std::string_view to_string(Language l);
std::optional<Ecosystem> parse_ecosystem(std::string_view s);

// Language by extension: .py is Python; .js/.cjs/.mjs are JavaScript.
Language language_for_path(std::string_view path);

// The language analyzed for a given ecosystem. Other-language files are
// recorded in Package::sources but never parsed.
Language analyzed_language(Ecosystem e);

struct SourceFile {
    std::string path;  // relative to Package::root, '/' separated
    Language language = Language::Other;
    std::string content;  // lossily decoded; empty for Language::Other
};

struct Manifest {
    std::vector<std::string> install_script_paths;
    std::map<std::string, std::string> raw;

    bool empty() const { return install_script_paths.empty() && raw.empty(); }
};

// Owns a scan-private directory and removes it on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view prefix = "seqscan-");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct Package {
    std::string name;
    std::string version;
    Ecosystem ecosystem = Ecosystem::PyPI;
    std::filesystem::path root;
    Manifest manifest;
    std::vector<SourceFile> sources;   // sorted by path
    std::vector<std::string> warnings;  // extraction and manifest diagnostics

    // Keeps the extraction directory alive for as long as any copy exists.
    std::shared_ptr<const TempDir> storage;

    const SourceFile* find_source(std::string_view path) const;
    bool is_analyzable(const SourceFile& f) const { return f.language == analyzed_language(ecosystem); }
};

struct LoadOptions {
    std::uint64_t max_total_bytes = archive::kDefaultMaxBytes;
};

// Extracts an archive (.tar.gz/.tgz/.tar/.zip/.whl) into a private temporary
// directory, parses the manifest and enumerates sources. A directory path is
// scanned in place. Throws Error{ArchiveCorrupt|ArchiveTooLarge}.
Package load_package(const std::filesystem::path& archive_path, Ecosystem ecosystem,
                     const LoadOptions& options = {});

// Missing manifests yield an empty Manifest. A malformed package.json also
// yields an empty Manifest and a warning appended to `warnings`.
Manifest parse_manifest(Ecosystem ecosystem, const std::filesystem::path& root,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace seqscan
