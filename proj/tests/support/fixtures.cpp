#include "support/fixtures.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace seqscan::testing {

namespace {

std::vector<std::vector<std::string>> read_tsv(std::string_view file) {
    const auto path = fixture_path(file);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing oracle " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        rows.push_back(cols);
    }
    return rows;
}

}  // namespace

std::filesystem::path fixture_path(std::string_view name) { return std::filesystem::path(SEQSCAN_FIXTURE_DIR) / name; }

std::vector<OracleEntry> read_sequence_oracle(std::string_view name) {
    std::vector<OracleEntry> out;
    for (const auto& row : read_tsv(std::string(name) + ".expected")) {
        OracleEntry e{row.at(0), {}};
        std::stringstream ss(row.at(1));
        std::string id;
        while (ss >> id) e.ids.push_back(id);
        out.push_back(e);
    }
    return out;
}

std::vector<OracleEdge> read_edge_oracle(std::string_view name) {
    std::vector<OracleEdge> out;
    for (const auto& row : read_tsv(std::string(name) + ".edges")) out.push_back({row.at(0), std::stoi(row.at(1)), row.at(2)});
    return out;
}

std::string_view oracle_phrase(std::string_view code) {
    static const std::map<std::string_view, std::string_view> phrases = {
        {"R1", "import operating system module"},
        {"R2", "use operating system module call"},
        {"R3", "import file system module"},
        {"R4", "use file system module call"},
        {"R5", "read sensitive information"},
        {"D1", "import network module"},
        {"D2", "use network module call"},
        {"D3", "use URL"},
        {"E1", "import encoding module"},
        {"E2", "use encoding module call"},
        {"E3", "use base64 string"},
        {"E4", "use long string"},
        {"P1", "import process module"},
        {"P2", "use process module call"},
        {"P3", "use bash script"},
        {"P4", "evaluate code at run-time"},
    };
    return phrases.at(code);
}

std::string oracle_render(const std::vector<OracleEntry>& entries) {
    std::vector<std::string> parts;
    for (const auto& e : entries) {
        if (e.ids.empty()) continue;
        parts.push_back("start entry " + e.root.substr(0, e.root.find("::")));
        for (const auto& id : e.ids) parts.emplace_back(oracle_phrase(id));
        parts.emplace_back("end of entry");
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out;
}

std::vector<std::string> codes_of(const std::vector<FeatureInstance>& items) {
    std::vector<std::string> out;
    for (const auto& f : items) out.emplace_back(code(f.id));
    return out;
}

std::vector<std::string> codes_of(const std::vector<FeatureId>& ids) {
    std::vector<std::string> out;
    for (const auto id : ids) out.emplace_back(code(id));
    return out;
}

std::vector<OracleEntry> entries_of(const BehaviorSequence& sequence, const std::vector<MethodRef>& methods) {
    std::vector<OracleEntry> out;
    for (const auto& e : sequence.entries) {
        if (!e.items.empty()) out.push_back({methods[e.root].qualified_name, codes_of(e.items)});
    }
    return out;
}

std::optional<MethodId> Analyzed::method(std::string_view qualified_name) const {
    for (MethodId m = 0; m < methods().size(); ++m) {
        if (methods()[m].qualified_name == qualified_name) return m;
    }
    return std::nullopt;
}

std::vector<std::string> Analyzed::codes(std::string_view qualified_name) const {
    const auto m = method(qualified_name);
    if (!m) throw std::runtime_error("no method " + std::string(qualified_name));
    return codes_of(analysis.features[*m]);
}

Analyzed analyze_sources(const std::vector<std::pair<std::string, std::string>>& files, Ecosystem ecosystem,
                         const CategoryTable& tables) {
    auto dir = std::make_shared<TempDir>();
    for (const auto& [path, content] : files) {
        const auto full = dir->path() / path;
        std::filesystem::create_directories(full.parent_path());
        std::ofstream(full, std::ios::binary) << content;
    }
    Analyzed out;
    out.package = std::make_unique<Package>(load_package(dir->path(), ecosystem));
    out.package->storage = dir;
    out.analysis = analyze(*out.package, tables);
    return out;
}

Analyzed analyze_fixture(std::string_view name, Ecosystem ecosystem) {
    Analyzed out;
    out.package = std::make_unique<Package>(load_package(fixture_path(name), ecosystem));
    out.analysis = analyze(*out.package, CategoryTable::defaults());
    return out;
}

}  // namespace seqscan::testing
