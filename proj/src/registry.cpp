#include "seqscan/registry.hpp"

#include "seqscan/digest.hpp"
#include "seqscan/error.hpp"
#include "seqscan/text.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <thread>
#include <tuple>

namespace seqscan::registry {

namespace {

using json = nlohmann::json;

std::optional<Timestamp> civil_to_epoch(int year, int month, int day, int hour, int minute, int second) {
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 || minute < 0 || minute > 59 ||
        second < 0 || second > 60) {
        return std::nullopt;
    }
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = second;
    return static_cast<Timestamp>(timegm(&tm));
}

std::string percent_encode(std::string_view s) {
    static const char* digits = "0123456789ABCDEF";
    std::string out;
    for (const unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '@') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += digits[c >> 4];
            out += digits[c & 15];
        }
    }
    return out;
}

std::string decode_entities(std::string_view s) {
    static const std::pair<std::string_view, char> table[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}, {"&#39;", '\''}};
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        bool replaced = false;
        if (s[i] == '&') {
            for (const auto& [entity, c] : table) {
                if (s.substr(i, entity.size()) == entity) {
                    out += c;
                    i += entity.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out += s[i++];
    }
    return out;
}

std::optional<std::string> tag_text(std::string_view block, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto b = block.find(open);
    if (b == std::string_view::npos) return std::nullopt;
    const auto e = block.find(close, b + open.size());
    if (e == std::string_view::npos) return std::nullopt;
    std::string_view body = text::trim(block.substr(b + open.size(), e - b - open.size()));
    if (text::starts_with(body, "<![CDATA[") && text::ends_with(body, "]]>")) {
        return std::string(body.substr(9, body.size() - 12));
    }
    return decode_entities(body);
}

std::vector<ReleaseEvent> parse_pypi_rss(std::string_view xml) {
    if (xml.find("<rss") == std::string_view::npos || xml.find("<channel") == std::string_view::npos) {
        throw Error(ErrorKind::FeedUnparseable, "PyPI updates feed is not an RSS document");
    }
    std::vector<ReleaseEvent> out;
    std::size_t pos = 0;
    while ((pos = xml.find("<item>", pos)) != std::string_view::npos) {
        const auto end = xml.find("</item>", pos);
        if (end == std::string_view::npos) throw Error(ErrorKind::FeedUnparseable, "unterminated <item>");
        const auto block = xml.substr(pos, end - pos);
        pos = end;
        const auto title = tag_text(block, "title");
        const auto date = tag_text(block, "pubDate");
        if (!title || !date) throw Error(ErrorKind::FeedUnparseable, "feed item without title or pubDate");
        const auto space = title->rfind(' ');
        const auto when = parse_rfc822(*date);
        if (space == std::string::npos || space == 0 || space + 1 == title->size() || !when) {
            throw Error(ErrorKind::FeedUnparseable, "bad feed item: " + *title);
        }
        out.push_back(ReleaseEvent{Ecosystem::PyPI, title->substr(0, space), title->substr(space + 1), *when, ""});
    }
    return out;
}

json parse_json(const std::string& body, std::string_view what) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::FeedUnparseable, std::string(what) + ": " + e.what());
    }
}

void sort_and_dedupe(std::vector<ReleaseEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const ReleaseEvent& a, const ReleaseEvent& b) {
        return std::tie(a.published_at, a.name, a.version) < std::tie(b.published_at, b.name, b.version);
    });
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<ReleaseEvent> kept;
    for (auto& e : events) {
        if (seen.emplace(e.name, e.version).second) kept.push_back(std::move(e));
    }
    events = std::move(kept);
}

std::optional<std::pair<std::string, int>> env_proxy(const Url& url) {
    if (url.is_loopback()) return std::nullopt;
    const char* no_proxy = std::getenv("NO_PROXY");
    if (!no_proxy) no_proxy = std::getenv("no_proxy");
    if (no_proxy) {
        for (auto entry : text::split(no_proxy, ',')) {
            std::string_view host = text::trim(entry);
            if (!host.empty() && host.front() == '.') host.remove_prefix(1);
            if (host == "*") return std::nullopt;
            if (!host.empty() && (url.host == host || text::ends_with(url.host, "." + std::string(host)))) {
                return std::nullopt;
            }
        }
    }
    const bool https = url.scheme == "https";
    for (const char* name : https ? std::array{"HTTPS_PROXY", "https_proxy"} : std::array{"HTTP_PROXY", "http_proxy"}) {
        const char* value = std::getenv(name);
        if (!value || !*value) continue;
        std::string spec = value;
        if (spec.find("://") == std::string::npos) spec = "http://" + spec;
        try {
            const Url proxy = parse_url(spec);
            return std::make_pair(proxy.host, proxy.port);
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
    const std::string str(text::trim(s));
    int y, mo, d, h, mi, sec, consumed = 0;
    char sep;
    if (std::sscanf(str.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &sec, &consumed) != 7 ||
        consumed != 19 || (sep != 'T' && sep != 't' && sep != ' ')) {
        return std::nullopt;
    }
    std::size_t i = 19;
    if (i < str.size() && str[i] == '.') {
        ++i;
        const std::size_t digits = i;
        while (i < str.size() && std::isdigit(static_cast<unsigned char>(str[i]))) ++i;
        if (i == digits) return std::nullopt;
    }
    auto t = civil_to_epoch(y, mo, d, h, mi, sec);
    if (!t) return std::nullopt;
    const std::string zone = str.substr(i);
    if (zone == "Z" || zone == "z") return t;
    int zh, zm;
    if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':' &&
        std::sscanf(zone.c_str() + 1, "%2d:%2d", &zh, &zm) == 2) {
        const Timestamp offset = zh * 3600 + zm * 60;
        return zone[0] == '+' ? *t - offset : *t + offset;
    }
    return std::nullopt;
}

std::optional<Timestamp> parse_rfc822(std::string_view s) {
    std::string str(text::trim(s));
    if (const auto comma = str.find(','); comma != std::string::npos) str = std::string(text::trim(str.substr(comma + 1)));
    int d, y, h, mi, sec = 0;
    char mon[4] = {}, zone[16] = {};
    if (std::sscanf(str.c_str(), "%d %3s %d %d:%d:%d %15s", &d, mon, &y, &h, &mi, &sec, zone) != 7) return std::nullopt;
    static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    int month = 0;
    for (int i = 0; i < 12; ++i) {
        if (std::string_view(mon) == months[i]) month = i + 1;
    }
    if (y < 100) y += y < 70 ? 2000 : 1900;
    auto t = civil_to_epoch(y, month, d, h, mi, sec);
    if (!t) return std::nullopt;
    const std::string_view z = zone;
    if (z == "GMT" || z == "UT" || z == "UTC" || z == "Z") return t;
    if (z.size() == 5 && (z[0] == '+' || z[0] == '-')) {
        int hh = 0, mm = 0;
        if (std::sscanf(zone + 1, "%2d%2d", &hh, &mm) != 2) return std::nullopt;
        const Timestamp offset = hh * 3600 + mm * 60;
        return z[0] == '+' ? *t - offset : *t + offset;
    }
    return std::nullopt;
}

std::string format_rfc3339(Timestamp t) {
    const std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Timestamp now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string Url::origin() const {
    const bool default_port = (scheme == "https" && port == 443) || (scheme == "http" && port == 80);
    const std::string h = host.find(':') != std::string::npos ? "[" + host + "]" : host;
    return scheme + "://" + h + (default_port ? "" : ":" + std::to_string(port));
}

bool Url::is_loopback() const {
    return host == "localhost" || host == "::1" || text::starts_with(host, "127.");
}

Url parse_url(std::string_view s) {
    Url u;
    const auto scheme_end = s.find("://");
    if (scheme_end == std::string_view::npos) throw Error(ErrorKind::ConfigInvalid, "not an absolute URL: " + std::string(s));
    u.scheme = text::to_lower(s.substr(0, scheme_end));
    if (u.scheme != "http" && u.scheme != "https") {
        throw Error(ErrorKind::ConfigInvalid, "unsupported URL scheme: " + std::string(s));
    }
    std::string_view rest = s.substr(scheme_end + 3);
    const auto path_start = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, path_start);
    u.target = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    if (const auto hash = u.target.find('#'); hash != std::string::npos) u.target.resize(hash);
    if (!u.target.empty() && u.target.front() == '?') u.target.insert(0, "/");
    std::string_view port;
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close == std::string_view::npos) throw Error(ErrorKind::ConfigInvalid, "bad host in URL: " + std::string(s));
        u.host = std::string(authority.substr(1, close - 1));
        if (close + 1 < authority.size() && authority[close + 1] == ':') port = authority.substr(close + 2);
    } else {
        const auto colon = authority.find(':');
        u.host = std::string(authority.substr(0, colon));
        if (colon != std::string_view::npos) port = authority.substr(colon + 1);
    }
    if (u.host.empty()) throw Error(ErrorKind::ConfigInvalid, "URL without host: " + std::string(s));
    u.host = text::to_lower(u.host);
    u.port = u.scheme == "https" ? 443 : 80;
    if (!port.empty()) {
        int p = 0;
        for (const char c : port) {
            if (!std::isdigit(static_cast<unsigned char>(c)) || p > 65535) {
                throw Error(ErrorKind::ConfigInvalid, "bad port in URL: " + std::string(s));
            }
            p = p * 10 + (c - '0');
        }
        if (p < 1 || p > 65535) throw Error(ErrorKind::ConfigInvalid, "bad port in URL: " + std::string(s));
        u.port = p;
    }
    return u;
}

void RateLimiter::acquire(const std::string& host) {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard<std::mutex> lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        auto& next = next_[host];
        slot = std::max(now, next);
        next = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

std::string archive_extension(std::string_view url, Ecosystem ecosystem) {
    std::string_view path = url.substr(0, url.find_first_of("?#"));
    path = path.substr(path.rfind('/') == std::string_view::npos ? 0 : path.rfind('/') + 1);
    const std::string lower = text::to_lower(path);
    for (const std::string_view ext : {".tar.gz", ".tar.bz2", ".tar.xz", ".tgz", ".zip", ".whl", ".tar", ".egg"}) {
        if (text::ends_with(lower, ext)) return std::string(ext);
    }
    return ecosystem == Ecosystem::NPM ? ".tgz" : ".tar.gz";
}

std::string archive_file_name(const ReleaseEvent& event) {
    auto clean = [](std::string_view s) {
        std::string out;
        for (const unsigned char c : s) out += (std::isalnum(c) || c == '.' || c == '_' || c == '-') ? char(c) : '_';
        while (!out.empty() && out.front() == '.') out.front() = '_';
        return out;
    };
    return clean(event.name) + "-" + clean(event.version) + archive_extension(event.archive_url, event.ecosystem);
}

Client::Client(ClientOptions options) : options_(std::move(options)), limiter_(options_.min_interval) {
    if (options_.attempts < 1) throw Error(ErrorKind::ConfigInvalid, "attempts must be at least 1");
}

std::size_t Client::requests_sent() const {
    std::lock_guard<std::mutex> lock(count_mu_);
    return requests_;
}

namespace {

struct StreamHooks {
    std::function<void()> reset;                           // before every attempt
    std::function<bool(std::uint64_t)> accept_length;      // Content-Length check
    std::function<bool(const char*, std::size_t)> sink;    // false aborts as too large
};

}  // namespace

// One GET with retries. Returns normally only on a completed 200 response.
static void stream_get(const ClientOptions& options, RateLimiter& limiter, const std::function<void()>& count,
                       const std::string& raw_url, const StreamHooks& hooks) {
    const Url url = parse_url(raw_url);
    if (url.scheme != "https" && !url.is_loopback()) {
        throw Error(ErrorKind::ConfigInvalid, "refusing plain-http URL outside loopback: " + raw_url);
    }
    auto backoff = options.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= options.attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        hooks.reset();
        limiter.acquire(url.host);
        count();

        httplib::Client cli(url.origin());
        cli.set_follow_location(true);
        cli.set_connection_timeout(options.timeout);
        cli.set_read_timeout(options.timeout);
        if (options.use_env_proxy) {
            if (const auto proxy = env_proxy(url)) cli.set_proxy(proxy->first, proxy->second);
        }
        int status = 0;
        bool too_large = false;
        const httplib::Headers headers = {{"User-Agent", "seqscan/1"}};
        auto res = cli.Get(
            url.target, headers,
            [&](const httplib::Response& r) {
                status = r.status;
                if (status != 200) return false;
                if (r.has_header("Content-Length")) {
                    const auto len = std::strtoull(r.get_header_value("Content-Length").c_str(), nullptr, 10);
                    if (!hooks.accept_length(len)) {
                        too_large = true;
                        return false;
                    }
                }
                return true;
            },
            [&](const char* data, std::size_t len) {
                if (!hooks.sink(data, len)) {
                    too_large = true;
                    return false;
                }
                return true;
            });
        if (too_large) throw Error(ErrorKind::ArchiveTooLarge, raw_url + " exceeds the size cap");
        if (res && res->status == 200) return;
        if (status == 404 || status == 410) throw Error(ErrorKind::NotFound, raw_url + ": HTTP " + std::to_string(status));
        const bool retriable = status == 0 || status == 200 || status == 429 || status >= 500;
        last_error = status == 0 || status == 200 ? httplib::to_string(res.error())
                                                  : "HTTP " + std::to_string(status);
        if (!retriable) throw Error(ErrorKind::NetworkFailure, raw_url + ": " + last_error);
    }
    throw Error(ErrorKind::NetworkFailure,
                raw_url + ": " + last_error + " after " + std::to_string(options.attempts) + " attempts");
}

HttpResponse Client::get(const std::string& url) {
    HttpResponse out;
    const std::uint64_t cap = options_.max_archive_bytes;
    stream_get(
        options_, limiter_, [this] { std::lock_guard<std::mutex> lock(count_mu_); ++requests_; }, url,
        StreamHooks{[&] { out.body.clear(); }, [&](std::uint64_t len) { return len <= cap; },
                    [&](const char* data, std::size_t len) {
                        out.body.append(data, len);
                        return out.body.size() <= cap;
                    }});
    out.status = 200;
    return out;
}

std::string Client::pypi_archive_url(const std::string& name, const std::string& version) {
    HttpResponse res;
    try {
        res = get(options_.pypi_endpoint + "/pypi/" + percent_encode(name) + "/" + percent_encode(version) + "/json");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NotFound) return "";
        throw;
    }
    const json doc = parse_json(res.body, "PyPI release metadata for " + name);
    if (!doc.is_object() || !doc.contains("urls") || !doc["urls"].is_array()) {
        throw Error(ErrorKind::FeedUnparseable, "PyPI release metadata without urls for " + name);
    }
    std::string first;
    for (const auto& u : doc["urls"]) {
        if (!u.is_object() || !u.contains("url") || !u["url"].is_string()) continue;
        const std::string link = u["url"].get<std::string>();
        if (u.value("packagetype", "") == "sdist") return link;
        if (first.empty()) first = link;
    }
    return first;
}

std::vector<ReleaseEvent> Client::pypi_recent(Timestamp since) {
    auto events = parse_pypi_rss(get(options_.pypi_endpoint + "/rss/updates.xml").body);
    events.erase(std::remove_if(events.begin(), events.end(), [&](const ReleaseEvent& e) { return e.published_at <= since; }),
                 events.end());
    return events;
}

std::vector<ReleaseEvent> Client::npm_recent(Timestamp since) {
    const json changes = parse_json(
        get(options_.npm_changes_endpoint + "/_changes?descending=true&limit=" + std::to_string(options_.npm_changes_batch))
            .body,
        "NPM changes feed");
    if (!changes.is_object() || !changes.contains("results") || !changes["results"].is_array()) {
        throw Error(ErrorKind::FeedUnparseable, "NPM changes feed without results");
    }
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& row : changes["results"]) {
        if (!row.is_object() || !row.contains("id") || !row["id"].is_string()) {
            throw Error(ErrorKind::FeedUnparseable, "NPM change without id");
        }
        const std::string id = row["id"].get<std::string>();
        if (text::starts_with(id, "_design/") || row.value("deleted", false)) continue;
        if (seen.insert(id).second) names.push_back(id);
    }

    std::vector<ReleaseEvent> events;
    for (const auto& name : names) {
        HttpResponse res;
        try {
            res = get(options_.npm_registry_endpoint + "/" + percent_encode(name));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NotFound) continue;
            throw;
        }
        const json doc = parse_json(res.body, "NPM packument for " + name);
        if (!doc.is_object() || !doc.contains("time") || !doc["time"].is_object()) {
            throw Error(ErrorKind::FeedUnparseable, "NPM packument without time map for " + name);
        }
        const json empty = json::object();
        const json& versions = doc.contains("versions") && doc["versions"].is_object() ? doc["versions"] : empty;
        for (const auto& [version, stamp] : doc["time"].items()) {
            if (version == "created" || version == "modified" || !stamp.is_string()) continue;
            const auto when = parse_rfc3339(stamp.get<std::string>());
            if (!when) throw Error(ErrorKind::FeedUnparseable, "bad timestamp for " + name + "@" + version);
            if (*when <= since) continue;
            std::string tarball;
            if (versions.contains(version)) {
                const json& v = versions[version];
                if (v.contains("dist") && v["dist"].is_object() && v["dist"].contains("tarball") &&
                    v["dist"]["tarball"].is_string()) {
                    tarball = v["dist"]["tarball"].get<std::string>();
                }
            }
            events.push_back(ReleaseEvent{Ecosystem::NPM, name, version, *when, tarball});
        }
    }
    return events;
}

std::vector<ReleaseEvent> Client::list_recent(Ecosystem ecosystem, Timestamp since, std::size_t limit) {
    auto events = ecosystem == Ecosystem::PyPI ? pypi_recent(since) : npm_recent(since);
    sort_and_dedupe(events);
    if (events.size() > limit) events.resize(limit);
    if (ecosystem == Ecosystem::PyPI) {
        for (auto& e : events) e.archive_url = pypi_archive_url(e.name, e.version);
    }
    return events;
}

FetchResult Client::fetch_archive(const ReleaseEvent& event, const std::filesystem::path& dest_dir) {
    if (event.archive_url.empty()) {
        throw Error(ErrorKind::NotFound, event.name + " " + event.version + " has no downloadable archive");
    }
    const std::filesystem::path dest = dest_dir / archive_file_name(event);
    const std::filesystem::path part = dest.string() + ".part";
    const std::uint64_t cap = options_.max_archive_bytes;

    std::ofstream out;
    Sha256* hash = nullptr;
    std::unique_ptr<Sha256> hash_owner;
    std::uint64_t written = 0;
    bool write_failed = false;
    auto cleanup = [&] {
        if (out.is_open()) out.close();
        std::error_code ec;
        std::filesystem::remove(part, ec);
    };
    try {
        stream_get(
            options_, limiter_, [this] { std::lock_guard<std::mutex> lock(count_mu_); ++requests_; }, event.archive_url,
            StreamHooks{[&] {
                            if (out.is_open()) out.close();
                            out.open(part, std::ios::binary | std::ios::trunc);
                            if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + part.string());
                            hash_owner = std::make_unique<Sha256>();
                            hash = hash_owner.get();
                            written = 0;
                        },
                        [&](std::uint64_t len) { return len <= cap; },
                        [&](const char* data, std::size_t len) {
                            written += len;
                            if (written > cap) return false;
                            out.write(data, static_cast<std::streamsize>(len));
                            if (!out) write_failed = true;
                            hash->update(std::string_view(data, len));
                            return true;
                        }});
        out.close();
        if (write_failed || !out) throw Error(ErrorKind::IoFailure, "cannot write " + part.string());
        std::filesystem::rename(part, dest);
    } catch (...) {
        cleanup();
        throw;
    }
    return FetchResult{dest, hash->hex_digest(), written};
}

std::vector<FetchOutcome> Client::fetch_all(const std::vector<ReleaseEvent>& events, const std::filesystem::path& dest_dir,
                                            std::size_t parallelism) {
    std::vector<FetchOutcome> outcomes(events.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < events.size(); i = next++) {
            outcomes[i].event = events[i];
            try {
                outcomes[i].result = fetch_archive(events[i], dest_dir);
            } catch (const Error& e) {
                outcomes[i].error = e.kind();
                outcomes[i].message = e.what();
            } catch (const std::exception& e) {
                outcomes[i].error = ErrorKind::IoFailure;
                outcomes[i].message = e.what();
            }
        }
    };
    const std::size_t n = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(events.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return outcomes;
}

}  // namespace seqscan::registry
