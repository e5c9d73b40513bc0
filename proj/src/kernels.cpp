#include "memaudit/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace memaudit::kernels {

namespace scalar {

std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] != b[i]) return i;
    return n;
}

std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value) {
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] != value) return i;
    return n;
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n);
std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {

std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t va = vld1q_u32(a + i);
        uint32x4_t vb = vld1q_u32(b + i);
        uint32x4_t eq = vceqq_u32(va, vb);
        if (vminvq_u32(eq) != 0xFFFFFFFFu) break;
    }
    return i + scalar::find_mismatch(a + i, b + i, n - i);
}

std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value) {
    const uint32x4_t vv = vdupq_n_u32(value);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t eq = vceqq_u32(vld1q_u32(p + i), vv);
        if (vminvq_u32(eq) != 0xFFFFFFFFu) break;
    }
    return i + scalar::count_leading(p + i, n - i, value);
}

}  // namespace neon
#endif

namespace {

using MismatchFn = std::size_t (*)(const TokenId*, const TokenId*, std::size_t);
using LeadingFn = std::size_t (*)(const TokenId*, std::size_t, TokenId);

struct Dispatch {
    MismatchFn find_mismatch = scalar::find_mismatch;
    LeadingFn count_leading = scalar::count_leading;
    const char* backend = "scalar";

    Dispatch() {
#if defined(__x86_64__) || defined(_M_X64)
        if (__builtin_cpu_supports("avx2")) {
            find_mismatch = avx2::find_mismatch;
            count_leading = avx2::count_leading;
            backend = "avx2";
        }
#elif defined(__aarch64__)
        find_mismatch = neon::find_mismatch;
        count_leading = neon::count_leading;
        backend = "neon";
#endif
    }
};

const Dispatch& dispatch() {
    static const Dispatch d;
    return d;
}

}  // namespace

std::size_t find_mismatch(const TokenId* a, const TokenId* b, std::size_t n) {
    return dispatch().find_mismatch(a, b, n);
}

std::size_t count_leading(const TokenId* p, std::size_t n, TokenId value) {
    return dispatch().count_leading(p, n, value);
}

const char* active_backend() { return dispatch().backend; }

}  // namespace memaudit::kernels
