#pragma once

#include "seqscan/features.hpp"
#include "seqscan/methods.hpp"
#include "seqscan/sequence.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace seqscan {

// The classifier input cap, in whitespace words.
inline constexpr std::size_t kDefaultTokenLimit = 512;
// Word cap used by the scan pipeline so that sub-word tokenization of the
// text still fits in 512 model tokens.
inline constexpr std::size_t kPipelineTokenLimit = 384;
inline constexpr std::size_t kMinTokenLimit = 8;

struct TextualDescription {
    std::string text;
    std::size_t token_count = 0;
    bool truncated = false;
};

// Keeps the first `limit` whitespace-delimited words of `text`, unchanged.
TextualDescription truncate_words(std::string_view text, std::size_t limit);

// `start entry <file>, <phrase>, ..., end of entry` per non-empty entry,
// fragments joined by ", ", then truncated.
TextualDescription render(const BehaviorSequence& sequence, std::size_t token_limit = kDefaultTokenLimit);

// The ablation rendering: phrases of all instances ordered by (file, line,
// column), no entry markers.
TextualDescription render_unordered(const std::vector<FeatureInstance>& features,
                                    const std::vector<MethodRef>& methods,
                                    std::size_t token_limit = kDefaultTokenLimit);

}  // namespace seqscan
