#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace memaudit {

/// Seeded generator with hand-rolled draw routines. std::mt19937_64 output is
/// fully specified by the standard; the std distributions are not, so every
/// draw here goes through our own arithmetic to keep runs byte-reproducible
/// across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform(std::uint64_t n) {
        // Rejection sampling on the top bits to avoid modulo bias.
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    /// Uniform real in [0, 1) with 53-bit resolution.
    double uniform_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform_real() < p; }

    /// Derive an independent child seed; used to fan replicates out to workers.
    std::uint64_t fork_seed() {
        return engine_() ^ 0x5851F42D4C957F2DULL;
    }

private:
    std::mt19937_64 engine_;
};

/// Zipf(alpha) sampler over ranks 1..n via inverse CDF on a precomputed
/// cumulative table. alpha = 0 degenerates to the uniform distribution.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double alpha) : cdf_(n) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += 1.0 / std::pow(static_cast<double>(i + 1), alpha);
            cdf_[i] = total;
        }
        for (auto& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    /// Returns a 0-based index.
    std::size_t draw(Rng& rng) const {
        const double u = rng.uniform_real();
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    std::size_t size() const { return cdf_.size(); }

    double weight(std::size_t i) const {
        return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
    }

private:
    std::vector<double> cdf_;
};

}  // namespace memaudit
