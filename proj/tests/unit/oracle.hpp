#pragma once

// Naive linear-scan reference implementations. Deliberately independent of
// the suffix-index code path (and of the SIMD kernels): plain loops only.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "memaudit/types.hpp"

namespace oracle {

inline bool match_at(const memaudit::TokenSeq& corpus, std::size_t pos,
                     memaudit::TokenSpan query) {
    if (pos + query.size() > corpus.size()) return false;
    for (std::size_t i = 0; i < query.size(); ++i)
        if (corpus[pos + i] != query[i]) return false;
    return true;
}

inline bool contains(const memaudit::TokenSeq& corpus, memaudit::TokenSpan query) {
    for (std::size_t pos = 0; pos + query.size() <= corpus.size(); ++pos)
        if (match_at(corpus, pos, query)) return true;
    return false;
}

inline std::uint64_t count_occurrences(const memaudit::TokenSeq& corpus,
                                       memaudit::TokenSpan query) {
    std::uint64_t n = 0;
    for (std::size_t pos = 0; pos + query.size() <= corpus.size(); ++pos)
        if (match_at(corpus, pos, query)) ++n;
    return n;
}

inline std::size_t longest_match(const memaudit::TokenSeq& corpus, memaudit::TokenSpan query) {
    std::size_t best = 0;
    for (std::size_t pos = 0; pos < corpus.size(); ++pos) {
        std::size_t len = 0;
        while (len < query.size() && pos + len < corpus.size() &&
               corpus[pos + len] == query[len])
            ++len;
        if (len > best) best = len;
    }
    return best;
}

}  // namespace oracle
