#include "support/archive_writer.hpp"

#include "seqscan/archive.hpp"
#include "seqscan/error.hpp"
#include "seqscan/package.hpp"

#include <gtest/gtest.h>

using namespace seqscan;
using namespace seqscan::testing;

namespace {

const std::vector<ArchiveEntry> kEntries = {
    {"demo-1.0/setup.py", "import os\n"},
    {"demo-1.0/demo/__init__.py", "from . import core\n"},
    {"demo-1.0/demo/core.py", std::string(3000, 'x') + "\n"},
    {"demo-1.0/README", "hello"},
};

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no Error thrown";
    return ErrorKind::BadUsage;
}

void expect_extracted(const std::filesystem::path& archive) {
    TempDir out;
    const auto result = archive::extract(archive, out.path());
    ASSERT_EQ(result.files.size(), kEntries.size());
    for (const auto& e : kEntries) EXPECT_EQ(read_bytes(out.path() / e.name), e.content) << e.name;
}

}  // namespace

TEST(Archive, TarGzTarAndZipRoundTrip) {
    TempDir dir;
    write_bytes(dir.path() / "a.tar.gz", gzip(make_tar(kEntries)));
    write_bytes(dir.path() / "a.tar", make_tar(kEntries));
    write_bytes(dir.path() / "a.zip", make_zip(kEntries, true));
    write_bytes(dir.path() / "stored.whl", make_zip(kEntries, false));
    EXPECT_EQ(archive::detect_format(dir.path() / "a.tar.gz"), archive::Format::TarGz);
    EXPECT_EQ(archive::detect_format(dir.path() / "a.tar"), archive::Format::Tar);
    EXPECT_EQ(archive::detect_format(dir.path() / "a.zip"), archive::Format::Zip);
    for (const char* name : {"a.tar.gz", "a.tar", "a.zip", "stored.whl"}) {
        SCOPED_TRACE(name);
        expect_extracted(dir.path() / name);
    }
}

TEST(Archive, UnsafeMembersAreDroppedWithWarnings) {
    TempDir dir;
    const std::vector<ArchiveEntry> entries = {
        {"ok/setup.py", "x = 1\n"},
        {"../escape.py", "bad\n"},
        {"/abs/path.py", "bad\n"},
        {"ok/link", "", '2', "/etc/passwd"},
    };
    write_bytes(dir.path() / "evil.tar.gz", gzip(make_tar(entries)));
    TempDir out;
    const auto result = archive::extract(dir.path() / "evil.tar.gz", out.path());
    EXPECT_EQ(result.files, (std::vector<std::string>{"ok/setup.py"}));
    EXPECT_EQ(result.warnings.size(), 3u);
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "escape.py"));
    EXPECT_FALSE(std::filesystem::exists(out.path() / "ok/link"));
}

TEST(Archive, SanitizesEntryPaths) {
    EXPECT_EQ(archive::sanitize_entry_path("a/./b//c.py"), "a/b/c.py");
    EXPECT_EQ(archive::sanitize_entry_path("a/b/../c.py"), std::nullopt);
    EXPECT_EQ(archive::sanitize_entry_path("../x"), std::nullopt);
    EXPECT_EQ(archive::sanitize_entry_path("/etc/passwd"), std::nullopt);
    EXPECT_EQ(archive::sanitize_entry_path("C:\\win\\x"), std::nullopt);
}

TEST(Archive, SizeCapAndCorruptionAreTypedErrors) {
    TempDir dir;
    write_bytes(dir.path() / "a.tar.gz", gzip(make_tar(kEntries)));
    write_bytes(dir.path() / "a.zip", make_zip(kEntries));
    for (const char* name : {"a.tar.gz", "a.zip"}) {
        TempDir out;
        EXPECT_EQ(kind_of([&] { archive::extract(dir.path() / name, out.path(), {1000}); }), ErrorKind::ArchiveTooLarge)
            << name;
    }
    std::string tgz = gzip(make_tar(kEntries));
    write_bytes(dir.path() / "cut.tar.gz", tgz.substr(0, tgz.size() / 2));
    write_bytes(dir.path() / "junk.zip", "PK\x03\x04 this is not a zip");
    write_bytes(dir.path() / "noise.tgz", "\x1f\x8b garbage");
    for (const char* name : {"cut.tar.gz", "junk.zip", "noise.tgz"}) {
        TempDir out;
        EXPECT_EQ(kind_of([&] { archive::extract(dir.path() / name, out.path()); }), ErrorKind::ArchiveCorrupt) << name;
    }
    std::string tar = make_tar(kEntries);
    tar[150] ^= 0x5a;  // checksum field
    write_bytes(dir.path() / "bad.tar", tar);
    TempDir out;
    EXPECT_EQ(kind_of([&] { archive::extract(dir.path() / "bad.tar", out.path()); }), ErrorKind::ArchiveCorrupt);
}

TEST(Package, SdistRootIdentityAndInstallScript) {
    TempDir dir;
    std::vector<ArchiveEntry> entries = kEntries;
    entries.push_back({"demo-1.0/PKG-INFO", "Metadata-Version: 2.1\nName: demo\nVersion: 1.0\n\nbody"});
    write_bytes(dir.path() / "demo-1.0.tar.gz", gzip(make_tar(entries)));
    const Package pkg = load_package(dir.path() / "demo-1.0.tar.gz", Ecosystem::PyPI);
    EXPECT_EQ(pkg.name, "demo");
    EXPECT_EQ(pkg.version, "1.0");
    EXPECT_EQ(pkg.manifest.install_script_paths, (std::vector<std::string>{"setup.py"}));
    ASSERT_NE(pkg.find_source("demo/core.py"), nullptr);
    EXPECT_EQ(pkg.find_source("demo/core.py")->language, Language::Python);
    ASSERT_NE(pkg.find_source("README"), nullptr);
    EXPECT_TRUE(pkg.find_source("README")->content.empty());
    EXPECT_FALSE(pkg.is_analyzable(*pkg.find_source("README")));
}

TEST(Package, IdentityFallsBackToFileName) {
    TempDir dir;
    write_bytes(dir.path() / "left-pad-0.0.3.tgz", gzip(make_tar({{"package/index.js", "module.exports = 1;\n"}})));
    const Package pkg = load_package(dir.path() / "left-pad-0.0.3.tgz", Ecosystem::NPM);
    EXPECT_EQ(pkg.name, "left-pad");
    EXPECT_EQ(pkg.version, "0.0.3");
}

TEST(Package, NpmHooksAndMalformedManifest) {
    TempDir dir;
    write_bytes(dir.path() / "ok/package.json",
                R"({"name":"x","version":"2.0.0","scripts":{"preinstall":"node ./scripts/pre.js && echo hi",
                    "postinstall":"node post.js","test":"node test.js"}})");
    write_bytes(dir.path() / "ok/scripts/pre.js", "1;\n");
    write_bytes(dir.path() / "ok/post.js", "1;\n");
    write_bytes(dir.path() / "ok/test.js", "1;\n");
    const Package pkg = load_package(dir.path() / "ok", Ecosystem::NPM);
    EXPECT_EQ(pkg.name, "x");
    EXPECT_EQ(pkg.manifest.install_script_paths, (std::vector<std::string>{"scripts/pre.js", "post.js"}));

    write_bytes(dir.path() / "bad/package.json", "{ not json");
    write_bytes(dir.path() / "bad/index.js", "1;\n");
    const Package bad = load_package(dir.path() / "bad", Ecosystem::NPM);
    EXPECT_TRUE(bad.manifest.install_script_paths.empty());
    ASSERT_EQ(bad.warnings.size(), 1u);
    EXPECT_NE(bad.warnings[0].find("ManifestUnparseable"), std::string::npos);
}

TEST(Package, MissingArchiveIsCorrupt) {
    EXPECT_EQ(kind_of([] { load_package("/nonexistent/x.tar.gz", Ecosystem::PyPI); }), ErrorKind::ArchiveCorrupt);
}
