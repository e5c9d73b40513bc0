#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

struct DivergenceConfig {
    double repeat_threshold_mean = 250.0;
    double repeat_threshold_spread = 50.0;
    double boost = 1.0;                     // emit_prob multiplier after divergence
    std::map<TokenId, double> word_boosts;  // per-word boost override
};

struct SynthModelConfig {
    std::size_t pool_size = 100;   // memorized spans
    std::size_t span_length = 50;  // tokens per span
    double zipf_alpha = 0.0;       // span emission skew; 0 = uniform
    double emit_prob = 0.1;        // p: chance an emission step produces a span
    DivergenceConfig divergence;
    std::uint64_t seed = 0;
    bool complete_prefixes = false;  // greedily finish pool spans on prefix prompts
    std::size_t filler_vocab = 4096;
};

struct PoolSpan {
    std::uint64_t offset = 0;  // absolute corpus offset
    std::uint32_t length = 0;
};

/// Expected memorized-token fraction of the base emission process: each step
/// emits a whole span (length S) with probability p, else one filler token.
inline double expected_memorized_fraction(double p, std::size_t span_length) {
    const double s = static_cast<double>(span_length);
    return p * s / (p * s + (1.0 - p));
}

/// Generator with a known memorized pool sampled verbatim from a corpus.
/// Filler tokens come from ids verified absent from the corpus, so a scan
/// over synthetic output can never report a false match.
class SynthModel {
public:
    static SynthModel build(const CorpusStream& corpus, const SynthModelConfig& cfg);

    /// Deterministic for a fixed (prompt, length, gen_seed).
    TokenSeq generate(TokenSpan prompt, std::size_t length, std::uint64_t gen_seed) const;

    /// Closed-form next-token probability under the generative rules; sums to
    /// 1 over the token universe for any context.
    double next_token_prob(TokenSpan context, TokenId token) const;

    /// Per-step probability of continuing a single-token repeat run of
    /// length `repeats` for `word` (the Fig.-8 style hazard curve).
    double repeat_continue_prob(TokenId word, std::uint64_t repeats) const;

    const std::vector<PoolSpan>& pool() const { return pool_; }
    const std::vector<TokenId>& filler_alphabet() const { return filler_; }
    const SynthModelConfig& config() const { return cfg_; }
    TokenSpan span_tokens(const PoolSpan& span) const;

    /// Largest pool that build() would accept for this corpus.
    static std::size_t max_pool_size(const CorpusStream& corpus, std::size_t span_length);

    void save_ground_truth(const std::filesystem::path& dir) const;

private:
    SynthModelConfig cfg_;
    std::vector<PoolSpan> pool_;
    std::vector<TokenSeq> pool_tokens_;  // span contents copied out of the corpus
    std::vector<TokenId> filler_;        // sorted
    ZipfSampler span_picker_{1, 0.0};
    std::map<TokenId, double> first_token_mass_;  // zipf mass by span first token

    double boost_for(TokenId word) const;
    double diverged_emit_prob(TokenId word) const;
    double threshold_for(TokenId word) const;
    bool is_filler(TokenId t) const;
    /// index of the pool span whose prefix equals the whole prompt, or npos
    std::size_t matching_span_prefix(TokenSpan prompt) const;
};

}  // namespace memaudit
