#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan::archive {

enum class Format { TarGz, Tar, Zip };

inline constexpr std::uint64_t kDefaultMaxBytes = 512ull * 1024 * 1024;

struct ExtractOptions {
    std::uint64_t max_total_bytes = kDefaultMaxBytes;
};

struct ExtractResult {
    std::vector<std::string> files;     // sanitized relative paths, in archive order
    std::vector<std::string> warnings;  // skipped entries and why
    std::uint64_t total_bytes = 0;
};

// Sniffs magic bytes; falls back to the file extension for empty files.
std::optional<Format> detect_format(const std::filesystem::path& archive);

// Extracts into dest (which must exist). Entries with `..` components or
// absolute names are dropped, links and device nodes are skipped.
// Throws Error{ArchiveCorrupt} or Error{ArchiveTooLarge}.
ExtractResult extract(const std::filesystem::path& archive, const std::filesystem::path& dest,
                      const ExtractOptions& options = {});

// Normalizes an archive member name to a relative path, or nullopt if the
// name is absolute or climbs out of the extraction root.
std::optional<std::string> sanitize_entry_path(std::string_view name);

}  // namespace seqscan::archive
