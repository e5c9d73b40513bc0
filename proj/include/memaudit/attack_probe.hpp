#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "memaudit/match_scan.hpp"
#include "memaudit/suffix_index.hpp"
#include "memaudit/synth_model.hpp"
#include "memaudit/tokenizer.hpp"

namespace memaudit {

enum class PromptKind { RandomBlock, RepeatWord };

struct PromptSpec {
    PromptKind kind = PromptKind::RandomBlock;
    // random-block: continuous blocks sampled with replacement from a prompt
    // pool corpus (distinct from the audit corpus)
    std::size_t block_len = 5;
    const CorpusStream* prompt_pool = nullptr;
    // repeat-word
    std::string word;
    std::size_t repeats = 50;
    bool require_single_token = true;
};

struct Prompt {
    std::string rendered;  // instruction wrapper, for transcripts/display
    TokenSeq tokens;       // what the generation source consumes
};

std::vector<Prompt> make_prompts(const PromptSpec& spec, std::size_t count, std::uint64_t seed,
                                 Tokenizer* tokenizer);

/// Anything that can continue a prompt: the synthetic model, an archived
/// transcript, or an external process speaking JSONL.
class GenerationSource {
public:
    virtual ~GenerationSource() = default;
    virtual TokenSeq generate(TokenSpan prompt, std::size_t length, std::uint64_t seed) = 0;
    virtual bool has_token_probs() const = 0;
    virtual double next_token_prob(TokenSpan context, TokenId token) = 0;
    virtual std::string kind() const = 0;
};

class SyntheticSource final : public GenerationSource {
public:
    explicit SyntheticSource(const SynthModel& model) : model_(&model) {}
    TokenSeq generate(TokenSpan prompt, std::size_t length, std::uint64_t seed) override {
        return model_->generate(prompt, length, seed);
    }
    bool has_token_probs() const override { return true; }
    double next_token_prob(TokenSpan context, TokenId token) override {
        return model_->next_token_prob(context, token);
    }
    std::string kind() const override { return "synthetic"; }

private:
    const SynthModel* model_;
};

/// Replays archived sessions: JSONL {"prompt":[ids], "output_tokens":[ids],
/// "token_probs":[p...]} (probs optional, one per output token). generate()
/// returns the seed-th recorded output for the prompt.
class TranscriptReplaySource final : public GenerationSource {
public:
    explicit TranscriptReplaySource(const std::filesystem::path& path);
    TokenSeq generate(TokenSpan prompt, std::size_t length, std::uint64_t seed) override;
    bool has_token_probs() const override { return all_have_probs_; }
    double next_token_prob(TokenSpan context, TokenId token) override;
    std::string kind() const override { return "transcript-replay"; }

private:
    struct Record {
        TokenSeq prompt;
        TokenSeq output;
        std::vector<double> probs;
    };
    std::vector<Record> records_;
    bool all_have_probs_ = true;
};

/// One child process per source; the probe writes {"prompt":[...],"length":n,
/// "seed":s} per line and reads {"tokens":[...]} per line.
class ExternalCommandSource final : public GenerationSource {
public:
    explicit ExternalCommandSource(const std::string& command);
    ~ExternalCommandSource() override;
    ExternalCommandSource(const ExternalCommandSource&) = delete;
    ExternalCommandSource& operator=(const ExternalCommandSource&) = delete;

    TokenSeq generate(TokenSpan prompt, std::size_t length, std::uint64_t seed) override;
    bool has_token_probs() const override { return false; }
    double next_token_prob(TokenSpan, TokenId) override;
    std::string kind() const override { return "external-command"; }

private:
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string read_buffer_;
};

struct DivergenceRecord {
    TokenId word = 0;
    std::size_t repeat_run_length = 0;  // leading repeats, separators allowed between
    TokenSeq tail;                      // output after the run
    bool diverged = false;
};

DivergenceRecord detect_divergence(TokenId word, TokenSpan output,
                                   const std::set<TokenId>& separators = {});

struct WordRankRow {
    std::string word;
    TokenId token = 0;
    double diverge_rate = 0.0;
    double memorized_token_rate = 0.0;
    std::uint64_t unique_grams = 0;
};

struct RankWordsOptions {
    std::size_t budget_tokens = 100000;  // generated tokens per word
    std::size_t generation_len = 2000;
    std::size_t prompt_repeats = 50;
    std::uint64_t seed = 0;
};

/// Probe each word with repeat prompts, scan the outputs, and rank by
/// memorized-token rate (descending). Per-word seeds derive from the word
/// token, so results do not depend on evaluation order.
std::vector<WordRankRow> rank_words(const std::vector<std::string>& words,
                                    GenerationSource& source, const SuffixIndex& index,
                                    const MatchConfig& cfg, Tokenizer& tokenizer,
                                    const RankWordsOptions& opts);

struct RepeatCurvePoint {
    std::uint64_t repeats = 0;
    double p10 = 0.0;
    double median = 0.0;
    double p90 = 0.0;
};

std::vector<RepeatCurvePoint> repeat_probability_curve(const std::vector<TokenId>& words,
                                                       GenerationSource& source,
                                                       std::uint64_t max_repeats,
                                                       std::uint64_t step = 1);

struct DiscoverableSpan {
    TokenSeq tokens;
    bool extractable = false;  // was this span recovered by the extraction attack
};

struct DiscoverableSummary {
    std::uint64_t tested = 0;
    std::uint64_t skipped = 0;
    double exact_rate = 0.0;
    double near_rate = 0.0;  // normalized edit distance <= tolerance
    // confusion matrix against the extractable flags (exact-match rule)
    std::uint64_t both = 0;
    std::uint64_t discoverable_only = 0;
    std::uint64_t extractable_only = 0;
    std::uint64_t neither = 0;
};

struct DiscoverableOptions {
    std::size_t suffix_len = 50;
    std::size_t min_prefix_len = 1;
    double edit_tolerance = 0.0;  // normalized Levenshtein, <= passes
    std::uint64_t seed = 0;
};

/// Prompt the source with each span's first len-suffix_len tokens and
/// greedy-generate the suffix. Spans shorter than min_prefix_len+suffix_len
/// are skipped and logged.
DiscoverableSummary discoverable_test(const std::vector<DiscoverableSpan>& spans,
                                      GenerationSource& source, const DiscoverableOptions& opts);

/// Token-level Levenshtein distance.
std::size_t edit_distance(TokenSpan a, TokenSpan b);

void save_divergence(const std::vector<DivergenceRecord>& records,
                     const std::filesystem::path& path);
void save_wordrank(const std::vector<WordRankRow>& rows, const std::filesystem::path& path);
void save_repeat_curve(const std::vector<RepeatCurvePoint>& curve,
                       const std::filesystem::path& path);
void save_discoverable(const DiscoverableSummary& summary, const std::filesystem::path& path);

}  // namespace memaudit
