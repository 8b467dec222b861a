#pragma once

#include "seqscan/methods.hpp"
#include "seqscan/package.hpp"
#include "seqscan/syntax.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan {

enum class FeatureId : std::uint8_t { R1, R2, R3, R4, R5, D1, D2, D3, E1, E2, E3, E4, P1, P2, P3, P4 };

inline constexpr std::size_t kFeatureCount = 16;

inline constexpr std::array<FeatureId, kFeatureCount> kAllFeatures = {
    FeatureId::R1, FeatureId::R2, FeatureId::R3, FeatureId::R4, FeatureId::R5, FeatureId::D1,
    FeatureId::D2, FeatureId::D3, FeatureId::E1, FeatureId::E2, FeatureId::E3, FeatureId::E4,
    FeatureId::P1, FeatureId::P2, FeatureId::P3, FeatureId::P4};

std::string_view code(FeatureId id);         // "R1"
std::string_view description(FeatureId id);  // "import operating system module"
std::optional<FeatureId> parse_feature_id(std::string_view code);

struct FeatureInstance {
    MethodId method = 0;
    int line = 1;
    int column = 0;
    FeatureId id = FeatureId::R1;

    bool operator==(const FeatureInstance&) const = default;
};

// Patterns are dotted names. `a.b` matches `a.b` and anything under it
// (`a.b.c`); a trailing `*` matches any name with that literal prefix
// (`os.exec*` matches `os.execv`).
struct LanguageTables {
    std::map<FeatureId, std::vector<std::string>> modules;  // R1 R3 D1 E1 P1
    std::map<FeatureId, std::vector<std::string>> calls;    // R2 R4 R5 D2 E2 P2 P4; R5 also applies to reads
    // Calls that count as E2 only with one of these literal arguments,
    // e.g. Buffer.from(s, 'base64').
    std::vector<std::string> encoding_argument_calls;
    std::vector<std::string> encoding_argument_values;
};

class CategoryTable {
public:
    static constexpr int kVersion = 1;

    // The embedded default tables.
    static const CategoryTable& defaults();
    static std::string default_json();

    // Parses a table document. Keys missing from `doc` keep their default
    // values (the document is applied as a JSON merge patch).
    static CategoryTable from_json(std::string_view doc);
    static CategoryTable load(const std::filesystem::path& path);
    std::string to_json() const;

    const LanguageTables& language(Language l) const;

    std::string url_pattern;
    std::size_t base64_min_length = 20;
    std::size_t long_string_threshold = 64;
    std::vector<std::string> bash_patterns;
    std::vector<std::string> sensitive_literal_patterns;
    LanguageTables python;
    LanguageTables javascript;

    bool matches_url(std::string_view s) const;
    bool matches_bash(std::string_view s) const;
    bool matches_sensitive_literal(std::string_view s) const;

private:
    void compile();

    std::regex url_rx_;
    std::regex bash_rx_;
    std::regex sensitive_rx_;
    bool has_bash_ = false;
    bool has_sensitive_ = false;
};

// True iff `s` is a plausible base64 blob: at least `min_length` chars from
// [A-Za-z0-9+/=], length divisible by 4, and it decodes.
bool is_base64_literal(std::string_view s, std::size_t min_length);

// Ids among {D3, E3, E4, P3}, in that order.
std::vector<FeatureId> classify_string_literal(std::string_view text, const CategoryTable& tables);

// First of R1 > R3 > D1 > E1 > P1 whose module set holds the module or one
// of its parent modules.
std::optional<FeatureId> match_import(std::string_view module_name, Language language, const CategoryTable& tables);

// Category of a fully expanded call name (`subprocess.Popen`). Longest
// literal pattern wins; an exact pattern beats a wildcard of equal length;
// remaining ties go P4 > P2 > D2 > E2 > R5 > R4 > R2.
std::optional<FeatureId> match_call(std::string_view name, Language language, const CategoryTable& tables);

// R5 when a read chain (`os.environ`, `process.env.HOME`) is sensitive.
bool is_sensitive_read(std::string_view name, Language language, const CategoryTable& tables);

// Rewrites the head of a dotted name through the file's import bindings:
// with `import requests as r`, `r.get` becomes `requests.get`.
std::string expand_name(std::string_view name, const std::vector<syntax::Binding>& bindings, Language language);

// Predicate telling the extractor that a call lands on an in-package method
// (such calls become call-graph edges, not features).
using InPackageCall = std::function<bool(MethodId caller, const syntax::CallSite&)>;

// Feature instances of one file. `methods` are the file's methods (main
// first); instance.method indexes into it. Sorted by (line, column, id).
std::vector<FeatureInstance> extract_features(const SourceFile& file, const syntax::ParsedFile& parsed,
                                              const std::vector<MethodRef>& methods, const CategoryTable& tables,
                                              const InPackageCall& in_package = {});

// Convenience overload that parses `file` itself. A file that fails to parse
// yields no instances and a warning.
std::vector<FeatureInstance> extract_features(const SourceFile& file, const std::vector<MethodRef>& methods,
                                              const CategoryTable& tables, std::vector<std::string>* warnings);

}  // namespace seqscan
