#include <doctest.h>

#include "memaudit/kernels.hpp"
#include "memaudit/rng.hpp"

using namespace memaudit;

TEST_CASE("find_mismatch basics") {
    TokenSeq a{1, 2, 3, 4, 5};
    TokenSeq b{1, 2, 9, 4, 5};
    CHECK(kernels::find_mismatch(a.data(), b.data(), 5) == 2);
    CHECK(kernels::find_mismatch(a.data(), a.data(), 5) == 5);
    CHECK(kernels::find_mismatch(a.data(), b.data(), 0) == 0);
}

TEST_CASE("compare_spans prefix rule") {
    TokenSeq shorter{1, 2};
    TokenSeq longer{1, 2, 3};
    CHECK(kernels::compare_spans(shorter, longer) < 0);
    CHECK(kernels::compare_spans(longer, shorter) > 0);
    CHECK(kernels::compare_spans(longer, longer) == 0);
    TokenSeq other{1, 3};
    CHECK(kernels::compare_spans(other, longer) > 0);
}

TEST_CASE("count_leading") {
    TokenSeq run{7, 7, 7, 7, 2, 7};
    CHECK(kernels::count_leading(run.data(), run.size(), 7) == 4);
    CHECK(kernels::count_leading(run.data(), run.size(), 9) == 0);
    CHECK(kernels::count_leading(run.data(), 4, 7) == 4);
}

// The dispatched variant must agree with the scalar reference on random
// inputs, including lengths around the vector width and mismatches at every
// position.
TEST_CASE("simd variants match scalar reference") {
    Rng rng(20240);
    INFO("backend: ", kernels::active_backend());
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = rng.uniform(70);
        TokenSeq a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<TokenId>(rng.uniform(4));
        b = a;
        if (n > 0 && rng.bernoulli(0.8)) {
            const std::size_t pos = rng.uniform(n);
            b[pos] ^= 1u + static_cast<TokenId>(rng.uniform(100));
        }
        CHECK(kernels::find_mismatch(a.data(), b.data(), n) ==
              kernels::scalar::find_mismatch(a.data(), b.data(), n));
        const TokenId v = static_cast<TokenId>(rng.uniform(4));
        CHECK(kernels::count_leading(a.data(), n, v) ==
              kernels::scalar::count_leading(a.data(), n, v));
    }
}
