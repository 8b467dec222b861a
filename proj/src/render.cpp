#include "seqscan/render.hpp"

#include "seqscan/error.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

namespace seqscan {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void check_limit(std::size_t limit) {
    if (limit < kMinTokenLimit) {
        throw Error(ErrorKind::BadUsage, "token limit must be at least " + std::to_string(kMinTokenLimit));
    }
}

}  // namespace

TextualDescription truncate_words(std::string_view text, std::size_t limit) {
    TextualDescription out;
    std::size_t i = 0;
    std::size_t end = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        if (out.token_count == limit) {
            out.truncated = true;
            break;
        }
        while (i < text.size() && !is_space(text[i])) ++i;
        ++out.token_count;
        end = i;
    }
    out.text = std::string(text.substr(0, end));
    return out;
}

TextualDescription render(const BehaviorSequence& sequence, std::size_t token_limit) {
    check_limit(token_limit);
    std::string text;
    auto append = [&](std::string_view fragment) {
        if (!text.empty()) text += ", ";
        text += fragment;
    };
    for (const auto& entry : sequence.entries) {
        if (entry.items.empty()) continue;
        append("start entry " + entry.root_file);
        for (const auto& item : entry.items) append(description(item.id));
        append("end of entry");
    }
    return truncate_words(text, token_limit);
}

TextualDescription render_unordered(const std::vector<FeatureInstance>& features,
                                    const std::vector<MethodRef>& methods, std::size_t token_limit) {
    check_limit(token_limit);
    std::vector<const FeatureInstance*> sorted;
    sorted.reserve(features.size());
    for (const auto& f : features) sorted.push_back(&f);
    std::stable_sort(sorted.begin(), sorted.end(), [&](const FeatureInstance* a, const FeatureInstance* b) {
        return std::tie(methods[a->method].file, a->line, a->column) <
               std::tie(methods[b->method].file, b->line, b->column);
    });
    std::string text;
    for (const auto* f : sorted) {
        if (!text.empty()) text += ", ";
        text += description(f->id);
    }
    return truncate_words(text, token_limit);
}

}  // namespace seqscan
