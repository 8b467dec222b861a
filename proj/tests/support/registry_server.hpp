#pragma once

#include "seqscan/registry.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace seqscan::testing {

struct FixtureRoute {
    // Status per request in order; the last one repeats.
    std::vector<int> statuses = {200};
    std::string body;
    std::string content_type = "application/octet-stream";
    bool chunked = false;  // no Content-Length
};

// Loopback HTTP server standing in for the package registries. Paths not
// set are 404.
class FixtureServer {
public:
    FixtureServer();
    ~FixtureServer();
    FixtureServer(const FixtureServer&) = delete;
    FixtureServer& operator=(const FixtureServer&) = delete;

    std::string origin() const;
    void set(const std::string& path, FixtureRoute route);
    std::size_t hits(const std::string& path) const;
    std::vector<std::chrono::steady_clock::time_point> hit_times(const std::string& path) const;

    // Client options pointing every endpoint here, with short delays.
    registry::ClientOptions client_options() const;

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::map<std::string, FixtureRoute> routes_;
    std::map<std::string, std::vector<std::chrono::steady_clock::time_point>> hits_;
};

struct FeedItem {
    std::string name;
    std::string version;
    registry::Timestamp published_at = 0;
};

// RSS document as the PyPI updates feed serves it, newest first as given.
std::string pypi_rss(const std::vector<FeedItem>& items);
// Release JSON listing a wheel and an sdist under `origin`/files/.
std::string pypi_release_json(const std::string& origin, const std::string& name, const std::string& version);
// `_changes` document naming `ids` (rows starting with '-' are deletions).
std::string npm_changes(const std::vector<std::string>& ids);
std::string npm_packument(const std::string& origin, const std::string& name, const std::vector<FeedItem>& versions);

std::string rfc822(registry::Timestamp t);
std::string rfc3339(registry::Timestamp t);

}  // namespace seqscan::testing
