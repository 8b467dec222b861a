#include "seqscan/archive.hpp"

#include "seqscan/error.hpp"
#include "seqscan/text.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;

namespace seqscan::archive {

namespace {

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorKind::ArchiveCorrupt, why); }

[[noreturn]] void too_large(std::uint64_t cap) {
    throw Error(ErrorKind::ArchiveTooLarge,
                "decompressed size exceeds cap of " + std::to_string(cap) + " bytes");
}

// Sequential byte source over a tar stream, optionally gzip-compressed.
class TarSource {
public:
    TarSource(const fs::path& path, bool gzip, std::uint64_t cap)
        : in_(path, std::ios::binary), gzip_(gzip), cap_(cap) {
        if (!in_) corrupt("cannot open " + path.string());
        if (gzip_) {
            std::memset(&zs_, 0, sizeof(zs_));
            if (inflateInit2(&zs_, 15 + 16) != Z_OK) corrupt("zlib init failed");
            zs_open_ = true;
        }
    }
    ~TarSource() {
        if (zs_open_) inflateEnd(&zs_);
    }
    TarSource(const TarSource&) = delete;
    TarSource& operator=(const TarSource&) = delete;

    // Reads up to n bytes; returns count read (short only at end of stream).
    std::size_t read(char* out, std::size_t n) {
        std::size_t got = gzip_ ? read_gzip(out, n) : read_raw(out, n);
        total_ += got;
        if (total_ > cap_) too_large(cap_);
        return got;
    }

    void read_exact(char* out, std::size_t n) {
        if (read(out, n) != n) corrupt("truncated tar stream");
    }

    void skip(std::uint64_t n) {
        std::array<char, 8192> buf{};
        while (n > 0) {
            const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(n, buf.size()));
            read_exact(buf.data(), chunk);
            n -= chunk;
        }
    }

    std::uint64_t total() const { return total_; }

private:
    std::size_t read_raw(char* out, std::size_t n) {
        in_.read(out, static_cast<std::streamsize>(n));
        return static_cast<std::size_t>(in_.gcount());
    }

    std::size_t read_gzip(char* out, std::size_t n) {
        std::size_t produced = 0;
        while (produced < n && !finished_) {
            if (zs_.avail_in == 0) {
                in_.read(inbuf_.data(), static_cast<std::streamsize>(inbuf_.size()));
                const auto got = static_cast<uInt>(in_.gcount());
                if (got == 0) corrupt("unexpected end of gzip stream");
                zs_.next_in = reinterpret_cast<Bytef*>(inbuf_.data());
                zs_.avail_in = got;
            }
            zs_.next_out = reinterpret_cast<Bytef*>(out + produced);
            zs_.avail_out = static_cast<uInt>(n - produced);
            const int rc = inflate(&zs_, Z_NO_FLUSH);
            produced = n - zs_.avail_out;
            if (rc == Z_STREAM_END) {
                // Concatenated members are legal gzip; trailing garbage is not our problem.
                if (zs_.avail_in == 0) {
                    in_.read(inbuf_.data(), static_cast<std::streamsize>(inbuf_.size()));
                    zs_.next_in = reinterpret_cast<Bytef*>(inbuf_.data());
                    zs_.avail_in = static_cast<uInt>(in_.gcount());
                }
                if (zs_.avail_in >= 2 && zs_.next_in[0] == 0x1f && zs_.next_in[1] == 0x8b) {
                    inflateReset(&zs_);
                } else {
                    finished_ = true;
                }
            } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
                corrupt(std::string("gzip inflate failed: ") + (zs_.msg ? zs_.msg : "unknown"));
            }
        }
        return produced;
    }

    std::ifstream in_;
    bool gzip_;
    std::uint64_t cap_;
    std::uint64_t total_ = 0;
    z_stream zs_{};
    bool zs_open_ = false;
    bool finished_ = false;
    std::array<char, 65536> inbuf_{};
};

std::uint64_t parse_tar_number(const char* field, std::size_t len) {
    const auto* u = reinterpret_cast<const unsigned char*>(field);
    if (u[0] & 0x80) {
        // GNU base-256 encoding.
        std::uint64_t v = u[0] & 0x7f;
        for (std::size_t i = 1; i < len; ++i) v = (v << 8) | u[i];
        return v;
    }
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < len && (field[i] == ' ' || field[i] == '\0')) ++i;
    for (; i < len && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
    return v;
}

std::string field_string(const char* field, std::size_t len) {
    return std::string(field, strnlen(field, len));
}

bool header_checksum_ok(const std::array<char, 512>& h) {
    const std::uint64_t stored = parse_tar_number(h.data() + 148, 8);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 512; ++i) {
        sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
    }
    return sum == stored;
}

// Parses a pax extended header block and returns its `path` value, if any.
std::optional<std::string> pax_path(const std::string& data) {
    std::size_t pos = 0;
    std::optional<std::string> path;
    while (pos < data.size()) {
        const auto space = data.find(' ', pos);
        if (space == std::string::npos) break;
        const auto len = std::strtoull(data.c_str() + pos, nullptr, 10);
        if (len == 0 || pos + len > data.size()) break;
        const std::string record = data.substr(space + 1, pos + len - space - 2);
        const auto eq = record.find('=');
        if (eq != std::string::npos && record.substr(0, eq) == "path") path = record.substr(eq + 1);
        pos += len;
    }
    return path;
}

void write_file(const fs::path& dest, const std::string& rel, const char* data, std::size_t n) {
    const fs::path target = dest / fs::path(rel);
    fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) corrupt("cannot write " + target.string());
    out.write(data, static_cast<std::streamsize>(n));
}

ExtractResult extract_tar(const fs::path& archive, const fs::path& dest, bool gzip,
                          const ExtractOptions& options) {
    ExtractResult result;
    TarSource src(archive, gzip, options.max_total_bytes);
    std::array<char, 512> header{};
    std::optional<std::string> long_name;
    int zero_blocks = 0;
    while (true) {
        const std::size_t got = src.read(header.data(), header.size());
        if (got == 0) break;  // some writers omit the end-of-archive blocks
        if (got != header.size()) corrupt("truncated tar header");
        if (std::all_of(header.begin(), header.end(), [](char c) { return c == '\0'; })) {
            if (++zero_blocks == 2) break;
            continue;
        }
        zero_blocks = 0;
        if (!header_checksum_ok(header)) corrupt("tar header checksum mismatch");

        const std::uint64_t size = parse_tar_number(header.data() + 124, 12);
        const std::uint64_t padded = (size + 511) / 512 * 512;
        const char type = header[156];
        std::string name = field_string(header.data(), 100);
        if (std::memcmp(header.data() + 257, "ustar", 5) == 0) {
            const std::string prefix = field_string(header.data() + 345, 155);
            if (!prefix.empty()) name = prefix + "/" + name;
        }

        if (type == 'L' || type == 'x') {
            if (size > (1u << 20)) corrupt("oversized extended header");
            std::string data(static_cast<std::size_t>(padded), '\0');
            src.read_exact(data.data(), data.size());
            data.resize(static_cast<std::size_t>(size));
            if (type == 'L') {
                long_name = std::string(data.c_str());
            } else if (auto p = pax_path(data)) {
                long_name = *p;
            }
            continue;
        }
        if (long_name) {
            name = *long_name;
            long_name.reset();
        }

        const bool regular = type == '0' || type == '\0' || type == '7';
        if (!regular) {
            if (type != '5' && type != 'g') result.warnings.push_back("skipped non-regular entry: " + name);
            src.skip(padded);
            continue;
        }
        const auto rel = sanitize_entry_path(name);
        if (!rel) {
            result.warnings.push_back("dropped unsafe entry: " + name);
            src.skip(padded);
            continue;
        }
        if (size > options.max_total_bytes) too_large(options.max_total_bytes);
        const fs::path target = dest / fs::path(*rel);
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) corrupt("cannot write " + target.string());
        std::array<char, 65536> buf{};
        std::uint64_t remaining = size;
        while (remaining > 0) {
            const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, buf.size()));
            src.read_exact(buf.data(), chunk);
            out.write(buf.data(), static_cast<std::streamsize>(chunk));
            remaining -= chunk;
        }
        src.skip(padded - size);
        result.files.push_back(*rel);
    }
    result.total_bytes = src.total();
    return result;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
    if (at + 2 > b.size()) corrupt("zip structure out of bounds");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t le32(const std::string& b, std::size_t at) {
    return static_cast<std::uint32_t>(le16(b, at)) | (static_cast<std::uint32_t>(le16(b, at + 2)) << 16);
}

std::string inflate_raw(const char* data, std::size_t n, std::uint64_t budget, std::uint64_t cap) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) corrupt("zlib init failed");
    std::string out;
    std::array<char, 65536> buf{};
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data));
    zs.avail_in = static_cast<uInt>(n);
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf.data());
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            corrupt("deflate stream invalid");
        }
        const std::size_t produced = buf.size() - zs.avail_out;
        if (produced == 0 && rc != Z_STREAM_END && zs.avail_in == 0) {
            inflateEnd(&zs);
            corrupt("deflate stream truncated");
        }
        out.append(buf.data(), produced);
        if (out.size() > budget) {
            inflateEnd(&zs);
            too_large(cap);
        }
    }
    inflateEnd(&zs);
    return out;
}

ExtractResult extract_zip(const fs::path& archive, const fs::path& dest, const ExtractOptions& options) {
    std::ifstream in(archive, std::ios::binary);
    if (!in) corrupt("cannot open " + archive.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 22) corrupt("zip too short");

    std::size_t eocd = std::string::npos;
    const std::size_t lowest = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (std::size_t i = bytes.size() - 22 + 1; i-- > lowest;) {
        if (le32(bytes, i) == 0x06054b50) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) corrupt("zip end-of-central-directory not found");
    const std::uint16_t count = le16(bytes, eocd + 10);
    const std::uint32_t cd_offset = le32(bytes, eocd + 16);
    if (count == 0xFFFF || cd_offset == 0xFFFFFFFF) corrupt("zip64 archives are not supported");

    ExtractResult result;
    std::size_t pos = cd_offset;
    for (std::uint16_t e = 0; e < count; ++e) {
        if (le32(bytes, pos) != 0x02014b50) corrupt("bad central directory entry");
        const std::uint16_t flags = le16(bytes, pos + 8);
        const std::uint16_t method = le16(bytes, pos + 10);
        const std::uint32_t crc = le32(bytes, pos + 16);
        const std::uint32_t csize = le32(bytes, pos + 20);
        const std::uint16_t name_len = le16(bytes, pos + 28);
        const std::uint16_t extra_len = le16(bytes, pos + 30);
        const std::uint16_t comment_len = le16(bytes, pos + 32);
        const std::uint32_t local = le32(bytes, pos + 42);
        if (pos + 46 + name_len > bytes.size()) corrupt("zip entry name out of bounds");
        const std::string name = bytes.substr(pos + 46, name_len);
        pos += 46u + name_len + extra_len + comment_len;

        if (!name.empty() && name.back() == '/') continue;
        if (flags & 0x1) {
            result.warnings.push_back("skipped encrypted entry: " + name);
            continue;
        }
        const auto rel = sanitize_entry_path(name);
        if (!rel) {
            result.warnings.push_back("dropped unsafe entry: " + name);
            continue;
        }
        if (le32(bytes, local) != 0x04034b50) corrupt("bad local header for " + name);
        const std::size_t data_at = local + 30u + le16(bytes, local + 26) + le16(bytes, local + 28);
        if (data_at + csize > bytes.size()) corrupt("zip entry data out of bounds: " + name);

        const std::uint64_t budget = options.max_total_bytes - result.total_bytes;
        std::string data;
        if (method == 0) {
            if (csize > budget) too_large(options.max_total_bytes);
            data = bytes.substr(data_at, csize);
        } else if (method == 8) {
            data = inflate_raw(bytes.data() + data_at, csize, budget, options.max_total_bytes);
        } else {
            result.warnings.push_back("skipped entry with unsupported compression: " + name);
            continue;
        }
        const auto actual = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
        if (actual != crc) corrupt("crc mismatch for " + name);
        result.total_bytes += data.size();
        write_file(dest, *rel, data.data(), data.size());
        result.files.push_back(*rel);
    }
    return result;
}

}  // namespace

std::optional<std::string> sanitize_entry_path(std::string_view name) {
    std::string normalized(name);
    std::replace(normalized.begin(), normalized.end(), '\\', '/');
    if (normalized.empty() || normalized.front() == '/') return std::nullopt;
    if (normalized.size() >= 2 && normalized[1] == ':') return std::nullopt;  // drive letter
    std::vector<std::string> kept;
    for (const auto& part : text::split(normalized, '/')) {
        if (part.empty() || part == ".") continue;
        if (part == "..") return std::nullopt;
        kept.push_back(part);
    }
    if (kept.empty()) return std::nullopt;
    return text::join(kept, "/");
}

std::optional<Format> detect_format(const fs::path& archive) {
    std::ifstream in(archive, std::ios::binary);
    if (!in) return std::nullopt;
    std::array<unsigned char, 512> head{};
    in.read(reinterpret_cast<char*>(head.data()), head.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got >= 2 && head[0] == 0x1f && head[1] == 0x8b) return Format::TarGz;
    if (got >= 4 && head[0] == 'P' && head[1] == 'K' && (head[2] == 3 || head[2] == 5)) return Format::Zip;
    if (got >= 262 && std::memcmp(head.data() + 257, "ustar", 5) == 0) return Format::Tar;

    const std::string name = text::to_lower(archive.filename().string());
    if (text::ends_with(name, ".tar.gz") || text::ends_with(name, ".tgz")) return Format::TarGz;
    if (text::ends_with(name, ".zip") || text::ends_with(name, ".whl")) return Format::Zip;
    if (text::ends_with(name, ".tar")) return Format::Tar;
    return std::nullopt;
}

ExtractResult extract(const fs::path& archive, const fs::path& dest, const ExtractOptions& options) {
    const auto format = detect_format(archive);
    if (!format) corrupt("unrecognized archive format: " + archive.string());
    switch (*format) {
        case Format::TarGz: return extract_tar(archive, dest, true, options);
        case Format::Tar: return extract_tar(archive, dest, false, options);
        case Format::Zip: return extract_zip(archive, dest, options);
    }
    corrupt("unreachable");
}

}  // namespace seqscan::archive
