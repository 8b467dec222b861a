#pragma once

#include "seqscan/archive.hpp"
#include "seqscan/error.hpp"
#include "seqscan/package.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan::registry {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

std::optional<Timestamp> parse_rfc3339(std::string_view s);
std::optional<Timestamp> parse_rfc822(std::string_view s);  // RSS pubDate
std::string format_rfc3339(Timestamp t);
Timestamp now();

struct ReleaseEvent {
    Ecosystem ecosystem = Ecosystem::PyPI;
    std::string name;
    std::string version;
    Timestamp published_at = 0;
    std::string archive_url;  // empty when the version vanished before it could be resolved

    bool operator==(const ReleaseEvent&) const = default;
};

struct Url {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string target;  // path and query, starts with '/'

    std::string origin() const;  // scheme://host[:port]
    bool is_loopback() const;
};

// Throws Error{ConfigInvalid} on anything that is not an absolute http(s) URL.
Url parse_url(std::string_view s);

struct ClientOptions {
    std::string pypi_endpoint = "https://pypi.org";
    std::string npm_changes_endpoint = "https://replicate.npmjs.com";
    std::string npm_registry_endpoint = "https://registry.npmjs.org";
    std::chrono::milliseconds min_interval{500};  // per host
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};  // doubled after every failed attempt
    std::chrono::seconds timeout{30};
    std::uint64_t max_archive_bytes = archive::kDefaultMaxBytes;
    std::size_t npm_changes_batch = 200;
    bool use_env_proxy = true;
};

// Minimum spacing between request starts, per host. Safe to share.
class RateLimiter {
public:
    explicit RateLimiter(std::chrono::milliseconds interval) : interval_(interval) {}
    void acquire(const std::string& host);

private:
    std::chrono::milliseconds interval_;
    std::mutex mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> next_;
};

struct FetchResult {
    std::filesystem::path path;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct FetchOutcome {
    ReleaseEvent event;
    std::optional<FetchResult> result;
    std::optional<ErrorKind> error;  // NotFound means removed before fetch
    std::string message;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class Client {
public:
    explicit Client(ClientOptions options = {});

    // Events published strictly after `since`, oldest first, deduplicated by
    // (name, version), at most `limit`. Throws NetworkFailure, FeedUnparseable.
    std::vector<ReleaseEvent> list_recent(Ecosystem ecosystem, Timestamp since, std::size_t limit);

    // Downloads to dest_dir/<name>-<version>.<ext>. Throws NetworkFailure,
    // ArchiveTooLarge (no partial file is left) or NotFound.
    FetchResult fetch_archive(const ReleaseEvent& event, const std::filesystem::path& dest_dir);

    // fetch_archive over many events with up to `parallelism` workers.
    // Outcomes keep the order of `events`.
    std::vector<FetchOutcome> fetch_all(const std::vector<ReleaseEvent>& events, const std::filesystem::path& dest_dir,
                                        std::size_t parallelism = 4);

    // GET with rate limiting and retries. 404 throws NotFound; other 4xx
    // throw NetworkFailure without retrying.
    HttpResponse get(const std::string& url);

    const ClientOptions& options() const { return options_; }
    std::size_t requests_sent() const;

private:
    std::vector<ReleaseEvent> pypi_recent(Timestamp since);
    std::vector<ReleaseEvent> npm_recent(Timestamp since);
    std::string pypi_archive_url(const std::string& name, const std::string& version);

    ClientOptions options_;
    RateLimiter limiter_;
    mutable std::mutex count_mu_;
    std::size_t requests_ = 0;
};

// Archive suffix of a download URL (".tar.gz", ".zip", ...), ".tgz" for NPM
// when the URL gives nothing usable.
std::string archive_extension(std::string_view url, Ecosystem ecosystem);

// `<name>-<version><ext>` with path separators and other unsafe bytes replaced.
std::string archive_file_name(const ReleaseEvent& event);

}  // namespace seqscan::registry
