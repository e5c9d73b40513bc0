// AVX2 variants of the token-run kernels. Compiled with -mavx2 in its own
// translation unit; only reached after the runtime CPU check in kernels.cpp.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "memaudit/kernels.hpp"

namespace memaudit::kernels::avx2 {

std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        const __m256i eq = _mm256_cmpeq_epi32(va, vb);
        const unsigned mask = static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(eq)));
        if (mask != 0xFFu) return i + static_cast<std::size_t>(__builtin_ctz(~mask));
    }
    return i + scalar::find_mismatch(a + i, b + i, n - i);
}

std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value) {
    const __m256i vv = _mm256_set1_epi32(static_cast<int>(value));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i vp = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
        const __m256i eq = _mm256_cmpeq_epi32(vp, vv);
        const unsigned mask = static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(eq)));
        if (mask != 0xFFu) return i + static_cast<std::size_t>(__builtin_ctz(~mask));
    }
    return i + scalar::count_leading(p + i, n - i, value);
}

}  // namespace memaudit::kernels::avx2

#endif
