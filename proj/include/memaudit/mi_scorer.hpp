#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "memaudit/match_scan.hpp"
#include "memaudit/tokenizer.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

/// Source of total negative log-likelihood (bits) for a generation.
class PerplexityProvider {
public:
    virtual ~PerplexityProvider() = default;
    virtual double nll_bits(const Generation& gen) const = 0;
    virtual std::string kind() const = 0;
};

/// Interpolated order-n gram model with add-alpha smoothing, trained on
/// supplied token text. The default provider when no model scores are given.
class GramModelProvider final : public PerplexityProvider {
public:
    GramModelProvider(TokenSpan training, std::size_t order = 5, double alpha = 0.1);

    double nll_bits(const Generation& gen) const override;
    std::string kind() const override { return "gram-model"; }

    double token_log2_prob(TokenSpan context, TokenId token) const;

private:
    std::size_t order_;
    double alpha_;
    double vocab_;  // distinct training tokens + 1 unseen slot
    std::uint64_t total_tokens_ = 0;
    // counts keyed by hashed (order, token window); 64-bit keys
    std::unordered_map<std::uint64_t, std::uint32_t> window_counts_;

    std::uint64_t window_key(TokenSpan window) const;
};

/// Scores precomputed elsewhere: JSONL {"id", "nll_bits"} per line.
class ExternalScoreProvider final : public PerplexityProvider {
public:
    explicit ExternalScoreProvider(const std::filesystem::path& path);
    double nll_bits(const Generation& gen) const override;
    std::string kind() const override { return "external-scores"; }

private:
    std::unordered_map<std::string, double> by_id_;
};

struct MIScore {
    std::string generation_id;
    double nll_bits = 0.0;
    double zlib_bits = 0.0;
    double ratio = 0.0;  // nll / zlib; lower signals memorization
};

/// zlib_bits is 8x the DEFLATE output length of the decoded text at maximum
/// compression. Lower nll/zlib flags likely-memorized text.
MIScore score(const Generation& gen, const PerplexityProvider& provider,
              const Tokenizer& tokenizer);

std::vector<MIScore> score_all(const std::vector<Generation>& generations,
                               const PerplexityProvider& provider, const Tokenizer& tokenizer,
                               std::size_t workers = 1);

struct PrecisionRow {
    double threshold = 0.0;
    bool defined = false;   // false when nothing is flagged at this threshold
    double precision = 0.0;
    std::uint64_t yield = 0;
};

/// Exact precision/yield per threshold: flagged = scores with ratio <= t.
std::vector<PrecisionRow> precision_sweep(const std::vector<MIScore>& scores,
                                          const std::vector<bool>& labels,
                                          const std::vector<double>& thresholds);

void save_scores(const std::vector<MIScore>& scores, const std::filesystem::path& path);
void save_precision(const std::vector<PrecisionRow>& rows, const std::filesystem::path& path);

}  // namespace memaudit
