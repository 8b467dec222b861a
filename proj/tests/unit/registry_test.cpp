#include "support/registry_server.hpp"

#include "seqscan/digest.hpp"
#include "seqscan/error.hpp"
#include "seqscan/package.hpp"

#include <gtest/gtest.h>

#include <ctime>

using namespace seqscan;
using namespace seqscan::registry;
using namespace seqscan::testing;
using namespace std::chrono_literals;

namespace {

constexpr Timestamp kT0 = 1000000000;  // 2001-09-09T01:46:40Z

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no Error thrown";
    return ErrorKind::BadUsage;
}

std::size_t files_in(const std::filesystem::path& dir) {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++n;
    return n;
}

ReleaseEvent event_for(const FixtureServer& s, const std::string& file) {
    return {Ecosystem::PyPI, "pkg", "1.0", kT0, s.origin() + "/files/" + file};
}

}  // namespace

TEST(Timestamps, Rfc3339AndRfc822) {
    EXPECT_EQ(parse_rfc3339("2001-09-09T01:46:40Z"), kT0);
    EXPECT_EQ(parse_rfc3339("2001-09-09T01:46:40.123Z"), kT0);
    EXPECT_EQ(parse_rfc3339("2001-09-09T03:46:40+02:00"), kT0);
    EXPECT_EQ(parse_rfc3339("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(parse_rfc3339("2001-09-09 01:46"), std::nullopt);
    EXPECT_EQ(parse_rfc822("Sun, 09 Sep 2001 01:46:40 GMT"), kT0);
    EXPECT_EQ(parse_rfc822("Sun, 09 Sep 2001 03:46:40 +0200"), kT0);
    EXPECT_EQ(parse_rfc822("yesterday"), std::nullopt);
    EXPECT_EQ(format_rfc3339(kT0), "2001-09-09T01:46:40Z");
    for (Timestamp t : {Timestamp{0}, kT0, Timestamp{1790000000}}) EXPECT_EQ(parse_rfc3339(format_rfc3339(t)), t);
    EXPECT_NEAR(static_cast<double>(now()), static_cast<double>(std::time(nullptr)), 2.0);
}

TEST(Urls, ParsingAndLoopback) {
    const auto u = parse_url("https://registry.npmjs.org/left-pad?x=1");
    EXPECT_EQ(u.scheme, "https");
    EXPECT_EQ(u.host, "registry.npmjs.org");
    EXPECT_EQ(u.port, 443);
    EXPECT_EQ(u.target, "/left-pad?x=1");
    EXPECT_EQ(u.origin(), "https://registry.npmjs.org");
    EXPECT_FALSE(u.is_loopback());
    const auto l = parse_url("http://127.0.0.1:8080");
    EXPECT_EQ(l.port, 8080);
    EXPECT_EQ(l.target, "/");
    EXPECT_TRUE(l.is_loopback());
    EXPECT_TRUE(parse_url("http://localhost/x").is_loopback());
    EXPECT_EQ(kind_of([] { parse_url("ftp://x/y"); }), ErrorKind::ConfigInvalid);
    EXPECT_EQ(kind_of([] { parse_url("pypi.org"); }), ErrorKind::ConfigInvalid);
}

TEST(Urls, ArchiveNames) {
    EXPECT_EQ(archive_extension("https://h/p/demo-1.0.tar.gz", Ecosystem::PyPI), ".tar.gz");
    EXPECT_EQ(archive_extension("https://h/p/demo-1.0-py3-none-any.whl?sig=1", Ecosystem::PyPI), ".whl");
    EXPECT_EQ(archive_extension("https://h/p/download", Ecosystem::NPM), ".tgz");
    EXPECT_EQ(archive_extension("https://h/p/download", Ecosystem::PyPI), ".tar.gz");
    const ReleaseEvent e{Ecosystem::NPM, "@scope/../evil", "1.0.0", 0, "https://h/x.tgz"};
    const auto name = archive_file_name(e);
    EXPECT_EQ(name.find('/'), std::string::npos);
    EXPECT_EQ(name.substr(name.size() - 4), ".tgz");
}

TEST(Registry, HttpsIsRequiredOutsideLoopback) {
    ClientOptions o;
    o.pypi_endpoint = "http://pypi.example";
    o.use_env_proxy = false;
    Client c(o);
    EXPECT_EQ(kind_of([&] { c.list_recent(Ecosystem::PyPI, 0, 10); }), ErrorKind::ConfigInvalid);
    EXPECT_EQ(c.requests_sent(), 0u);
}

TEST(Registry, PyPiFeedIsOrderedDedupedAndLimited) {
    FixtureServer s;
    // Newest first, as the feed is served; "b 2.0" appears twice.
    s.set("/rss/updates.xml", {{200},
                               pypi_rss({{"e", "1.0", kT0 + 500},
                                         {"d", "1.0", kT0 + 400},
                                         {"b", "2.0", kT0 + 300},
                                         {"c", "0.1", kT0 + 300},
                                         {"b", "2.0", kT0 + 200},
                                         {"a", "1.0", kT0 + 100}}),
                               "application/rss+xml"});
    for (const auto& [n, v] : std::vector<std::pair<std::string, std::string>>{{"a", "1.0"}, {"b", "2.0"}, {"c", "0.1"}}) {
        s.set("/pypi/" + n + "/" + v + "/json", {{200}, pypi_release_json(s.origin(), n, v), "application/json"});
    }
    Client c(s.client_options());
    const auto got = c.list_recent(Ecosystem::PyPI, kT0, 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0], (ReleaseEvent{Ecosystem::PyPI, "a", "1.0", kT0 + 100, s.origin() + "/files/a-1.0.tar.gz"}));
    EXPECT_EQ(got[1].name, "b");
    EXPECT_EQ(got[1].published_at, kT0 + 200);
    EXPECT_EQ(got[2].name, "c");
    EXPECT_EQ(s.hits("/pypi/d/1.0/json"), 0u);  // only kept events are resolved

    const auto later = c.list_recent(Ecosystem::PyPI, kT0 + 300, 10);
    ASSERT_EQ(later.size(), 2u);
    EXPECT_EQ(later[0].name, "d");
    EXPECT_EQ(later[0].archive_url, "");  // release JSON is gone
    EXPECT_TRUE(c.list_recent(Ecosystem::PyPI, now(), 10).empty());
}

TEST(Registry, MalformedFeedIsFeedUnparseable) {
    FixtureServer s;
    s.set("/rss/updates.xml", {{200}, "<html>maintenance</html>", "text/html"});
    Client c(s.client_options());
    EXPECT_EQ(kind_of([&] { c.list_recent(Ecosystem::PyPI, 0, 5); }), ErrorKind::FeedUnparseable);
    s.set("/rss/updates.xml", {{200}, "<rss><channel><item><title>x 1</title></item></channel></rss>"});
    EXPECT_EQ(kind_of([&] { c.list_recent(Ecosystem::PyPI, 0, 5); }), ErrorKind::FeedUnparseable);
}

TEST(Registry, NpmChangesAndPackuments) {
    FixtureServer s;
    s.set("/_changes", {{200}, npm_changes({"alpha", "_design/app", "-gone", "beta", "missing", "alpha"}),
                        "application/json"});
    s.set("/alpha", {{200}, npm_packument(s.origin(), "alpha", {{"alpha", "1.0.0", kT0 + 10}, {"alpha", "1.1.0", kT0 + 30}}),
                     "application/json"});
    s.set("/beta", {{200}, npm_packument(s.origin(), "beta", {{"beta", "0.0.1", kT0 + 20}}), "application/json"});
    Client c(s.client_options());
    const auto got = c.list_recent(Ecosystem::NPM, kT0, 10);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0], (ReleaseEvent{Ecosystem::NPM, "alpha", "1.0.0", kT0 + 10, s.origin() + "/files/alpha-1.0.0.tgz"}));
    EXPECT_EQ(got[1].name, "beta");
    EXPECT_EQ(got[2].version, "1.1.0");
    EXPECT_EQ(s.hits("/alpha"), 1u);
    EXPECT_EQ(s.hits("/gone"), 0u);
    EXPECT_EQ(c.list_recent(Ecosystem::NPM, kT0 + 15, 1).at(0).name, "beta");
}

TEST(Registry, FetchVerifiesChecksumAndName) {
    FixtureServer s;
    const std::string body(5000, 'z');
    s.set("/files/pkg-1.0.tar.gz", {{200}, body});
    Client c(s.client_options());
    TempDir dest;
    const auto r = c.fetch_archive(event_for(s, "pkg-1.0.tar.gz"), dest.path());
    EXPECT_EQ(r.path, dest.path() / "pkg-1.0.tar.gz");
    EXPECT_EQ(r.bytes, body.size());
    EXPECT_EQ(r.sha256, sha256_hex(body));
    EXPECT_EQ(sha256_file(r.path), r.sha256);
    EXPECT_EQ(files_in(dest.path()), 1u);
}

TEST(Registry, RetriesServerErrorsWithBackoff) {
    FixtureServer s;
    s.set("/files/flaky.tar.gz", {{503, 503, 200}, "ok"});
    auto o = s.client_options();
    o.initial_backoff = 40ms;
    Client c(o);
    TempDir dest;
    const auto start = std::chrono::steady_clock::now();
    const auto r = c.fetch_archive(event_for(s, "flaky.tar.gz"), dest.path());
    EXPECT_GE(std::chrono::steady_clock::now() - start, 40ms + 80ms);
    EXPECT_EQ(s.hits("/files/flaky.tar.gz"), 3u);
    EXPECT_EQ(r.bytes, 2u);

    s.set("/files/down.tar.gz", {{503}, ""});
    EXPECT_EQ(kind_of([&] { c.fetch_archive(event_for(s, "down.tar.gz"), dest.path()); }), ErrorKind::NetworkFailure);
    EXPECT_EQ(s.hits("/files/down.tar.gz"), static_cast<std::size_t>(o.attempts));

    s.set("/files/forbidden.tar.gz", {{403}, ""});
    EXPECT_EQ(kind_of([&] { c.fetch_archive(event_for(s, "forbidden.tar.gz"), dest.path()); }), ErrorKind::NetworkFailure);
    EXPECT_EQ(s.hits("/files/forbidden.tar.gz"), 1u);
}

TEST(Registry, RemovedArchiveIsNotFound) {
    FixtureServer s;
    Client c(s.client_options());
    TempDir dest;
    EXPECT_EQ(kind_of([&] { c.fetch_archive(event_for(s, "vanished.tar.gz"), dest.path()); }), ErrorKind::NotFound);
    EXPECT_EQ(s.hits("/files/vanished.tar.gz"), 1u);
    ReleaseEvent unresolved{Ecosystem::PyPI, "x", "1", kT0, ""};
    EXPECT_EQ(kind_of([&] { c.fetch_archive(unresolved, dest.path()); }), ErrorKind::NotFound);
    EXPECT_EQ(files_in(dest.path()), 0u);
}

TEST(Registry, SizeCapLeavesNoPartialFile) {
    FixtureServer s;
    s.set("/files/big.tar.gz", {{200}, std::string(100000, 'b')});
    s.set("/files/big-chunked.tar.gz", {{200}, std::string(100000, 'b'), "application/octet-stream", true});
    auto o = s.client_options();
    o.max_archive_bytes = 10000;
    Client c(o);
    TempDir dest;
    for (const char* f : {"big.tar.gz", "big-chunked.tar.gz"}) {
        EXPECT_EQ(kind_of([&] { c.fetch_archive(event_for(s, f), dest.path()); }), ErrorKind::ArchiveTooLarge) << f;
        EXPECT_EQ(s.hits(std::string("/files/") + f), 1u) << f;  // never retried
    }
    EXPECT_EQ(files_in(dest.path()), 0u);
}

TEST(Registry, FetchAllKeepsOrderAndReportsEachOutcome) {
    FixtureServer s;
    s.set("/files/one.tar.gz", {{200}, "1"});
    s.set("/files/three.tar.gz", {{200}, "333"});
    Client c(s.client_options());
    TempDir dest;
    std::vector<ReleaseEvent> events;
    for (const char* f : {"one", "two", "three"}) {
        events.push_back({Ecosystem::PyPI, f, "1.0", kT0, s.origin() + "/files/" + f + ".tar.gz"});
    }
    const auto out = c.fetch_all(events, dest.path(), 3);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].event, events[0]);
    EXPECT_EQ(out[0].result->bytes, 1u);
    EXPECT_FALSE(out[1].result);
    EXPECT_EQ(out[1].error, ErrorKind::NotFound);
    EXPECT_EQ(out[2].result->bytes, 3u);
}

TEST(Registry, RateLimiterSpacesRequestsPerHost) {
    FixtureServer s;
    s.set("/files/r.tar.gz", {{200}, "r"});
    auto o = s.client_options();
    o.min_interval = 100ms;
    Client c(o);
    for (int i = 0; i < 3; ++i) c.get(s.origin() + "/files/r.tar.gz");
    const auto t = s.hit_times("/files/r.tar.gz");
    ASSERT_EQ(t.size(), 3u);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GE(t[i] - t[i - 1], 90ms);
    EXPECT_EQ(c.requests_sent(), 3u);

    RateLimiter limiter(50ms);
    const auto start = std::chrono::steady_clock::now();
    limiter.acquire("a");
    limiter.acquire("b");  // another host does not wait
    EXPECT_LT(std::chrono::steady_clock::now() - start, 40ms);
    limiter.acquire("a");
    EXPECT_GE(std::chrono::steady_clock::now() - start, 50ms);
}
