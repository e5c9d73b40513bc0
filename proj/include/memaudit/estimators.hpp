#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memaudit/match_scan.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

/// Counts-of-counts: N_r = number of distinct grams observed exactly r times.
struct FrequencyTable {
    std::map<std::uint64_t, std::uint64_t> counts;  // r -> N_r, r >= 1

    std::uint64_t total_observations() const;  // sum r * N_r
    std::uint64_t distinct_count() const;      // sum N_r
    std::uint64_t n_r(std::uint64_t r) const {
        auto it = counts.find(r);
        return it == counts.end() ? 0 : it->second;
    }

    static FrequencyTable from_gram_set(const UniqueGramSet& grams);
    static FrequencyTable from_item_counts(const std::vector<std::uint64_t>& per_item);
    static FrequencyTable from_matches(const std::vector<MatchReport>& reports);

    static FrequencyTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Simple Good-Turing smoothing: log-log regression of the averaged-neighbor
/// transform Z_r, switching from empirical to regressed counts once the
/// Turing and regression estimates stop differing significantly (or the
/// support gaps out). With a single support point the regression is
/// degenerate and the table falls back to empirical counts.
struct SmoothedCounts {
    bool fallback = false;
    double slope = 0.0;
    double intercept = 0.0;
    std::uint64_t switch_r = 0;  // smallest r served by the regression
    std::map<std::uint64_t, double> support;  // S(N_r) per observed r

    /// Smoothed expected count-of-counts at any r >= 1 (regression off
    /// support; 0 in fallback when unobserved).
    double at(std::uint64_t r) const;
};

SmoothedCounts smooth(const FrequencyTable& freq);

/// Probabilities that the next draw is novel or belongs to the class of
/// grams currently seen r times. Sums to 1.
struct NextDrawProbabilities {
    double p_novel = 0.0;
    std::vector<std::pair<std::uint64_t, double>> class_probs;  // ascending r
    bool smoothing_fallback = false;
};

/// The novel mass is the Turing missing-mass estimate N_1/N. When N_1 = 0 it
/// stays 0 under a valid regression (a saturated table has nothing left to
/// discover), and falls back to the Laplace value 1/(N+1) only when the table
/// is too degenerate to regress. Class masses use smoothed adjusted counts
/// r* = (r+1) S(r+1)/S(r), renormalized to 1 - p_novel.
NextDrawProbabilities good_turing_next(const FrequencyTable& freq, bool use_smoothing = true);

struct DiscoveryCurve {
    // (observations consumed, distinct grams seen)
    std::vector<std::pair<std::uint64_t, double>> points;
};

struct EstimateResult {
    std::string method;
    double point_estimate = 0.0;
    double band_low = 0.0;   // 10th percentile over replicates (when simulated)
    double band_high = 0.0;  // 90th percentile
    std::uint64_t seed = 0;
    std::uint64_t horizon = 0;
    std::size_t replicates = 0;
    DiscoveryCurve trajectory;  // mean simulated extension, empty for closed forms
};

struct SequentialGtOptions {
    std::uint64_t horizon = 0;      // future draws to simulate
    std::size_t replicates = 32;
    std::uint64_t seed = 0;
    std::uint64_t resmooth_every = 1000;  // draws between re-smoothing passes
    std::size_t workers = 1;
    std::size_t trajectory_points = 64;
};

/// Monte-Carlo sequential Good-Turing: draw novel-vs-seen per
/// good_turing_next, update the table, count cumulative distinct grams.
EstimateResult sequential_gt(const FrequencyTable& freq, const SequentialGtOptions& opts);

/// Chao1 lower-bound species estimate from singletons and doubletons.
EstimateResult chao1(const FrequencyTable& freq);

struct CaptureCounts {
    std::uint64_t marked = 0;       // N
    std::uint64_t recaptured = 0;   // K
    std::uint64_t overlap = 0;      // L, marked among recaptured
};

struct MarkRecaptureResult {
    bool defined = false;
    double estimate = 0.0;  // N*K/L, or the N+K lower bound when L = 0
};

MarkRecaptureResult mark_recapture(const CaptureCounts& counts);

/// Split the observation stream into a marking phase (run until n_marked
/// distinct grams are seen) and a recapture phase of the next k_samples
/// observations; the overlap counts distinct marked grams seen again.
/// Returns nullopt when the stream is too short for both phases.
std::optional<CaptureCounts> derive_capture_counts(const std::vector<MatchReport>& reports,
                                                   std::uint64_t n_marked,
                                                   std::uint64_t k_samples);

struct SubsamplePoint {
    double fraction = 0.0;
    std::uint64_t found = 0;
};

struct SubsampleCurve {
    std::vector<SubsamplePoint> points;
    double fit_scale = 0.0;     // a in M(s) = a * s^b
    double fit_exponent = 0.0;  // b
    double predicted_at_2x = 0.0;
    bool fit_valid = false;
};

/// Random document-granularity subsets of the corpus (nested, seeded): how
/// many of the observed unique grams would each subset have caught. Fits
/// M(s) = a*s^b on the log-log points.
SubsampleCurve subsample_curve(const UniqueGramSet& grams, const SuffixIndex& index,
                               const std::vector<ManifestEntry>& manifest,
                               const std::vector<double>& fractions, std::uint64_t seed);

void save_estimate(const EstimateResult& result, const std::filesystem::path& path);
void save_curve(const DiscoveryCurve& curve, const std::filesystem::path& path);

}  // namespace memaudit
