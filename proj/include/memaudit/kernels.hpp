#pragma once

#include <cstddef>

#include "memaudit/types.hpp"

namespace memaudit::kernels {

// Token-stream inner loops. Suffix sorting, binary search and divergence
// detection all reduce to "where do two token runs first differ". The
// dispatched entry points pick an AVX2 (x86) or NEON (aarch64) variant at
// startup when the CPU supports it; the scalar namespace is the reference
// the SIMD paths are equivalence-tested against.

namespace scalar {
std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n);
std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value);
}  // namespace scalar

/// Index of the first position where a and b differ; n if equal over n tokens.
std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n);

/// Length of the leading run of `value` at the start of p.
std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value);

/// Longest common prefix of two spans.
inline std::size_t common_prefix(TokenSpan a, TokenSpan b) {
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    return find_mismatch(a.data(), b.data(), n);
}

/// Lexicographic comparison under the prefix rule (a proper prefix sorts
/// before its extensions). Returns <0, 0, >0.
inline int compare_spans(TokenSpan a, TokenSpan b) {
    const std::size_t lcp = common_prefix(a, b);
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    if (lcp < n) return a[lcp] < b[lcp] ? -1 : 1;
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

/// Name of the variant selected at startup: "avx2", "neon" or "scalar".
const char* active_backend();

}  // namespace memaudit::kernels
