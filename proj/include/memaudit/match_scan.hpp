#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "memaudit/suffix_index.hpp"
#include "memaudit/tokenizer.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

struct MatchConfig {
    std::size_t k = 50;        // window length in tokens
    double entropy_min = 2.0;  // bits; windows below are ignored
    std::size_t stride = 1;
};

struct MatchSpan {
    std::size_t start = 0;
    std::size_t length = 0;
    std::uint64_t occurrences = 0;  // corpus count of the span's first k-gram
};

struct MatchReport {
    std::string generation_id;
    std::vector<MatchSpan> matched_spans;  // maximal unions of matched windows
    std::vector<Digest128> window_digests;  // one per matched window, in order
    std::uint64_t memorized_token_count = 0;
    std::uint64_t total_token_count = 0;
};

/// Distinct memorized k-grams keyed by 128-bit digest, with observation
/// multiplicity and one witness corpus offset so later stages can recover
/// the tokens without storing them per gram.
class UniqueGramSet {
public:
    struct Info {
        std::uint64_t observations = 0;
        std::uint64_t witness_offset = 0;
    };

    void insert(const Digest128& digest, std::uint64_t witness_offset) {
        auto [it, inserted] = grams_.try_emplace(digest, Info{0, witness_offset});
        it->second.observations += 1;
        if (!inserted && witness_offset < it->second.witness_offset)
            it->second.witness_offset = witness_offset;
    }

    std::size_t unique_count() const { return grams_.size(); }

    std::uint64_t total_observations() const {
        std::uint64_t n = 0;
        for (const auto& [d, info] : grams_) n += info.observations;
        return n;
    }

    void merge(const UniqueGramSet& other) {
        for (const auto& [d, info] : other.grams_) {
            auto [it, inserted] = grams_.try_emplace(d, info);
            if (!inserted) {
                it->second.observations += info.observations;
                it->second.witness_offset =
                    std::min(it->second.witness_offset, info.witness_offset);
            }
        }
    }

    const std::unordered_map<Digest128, Info, Digest128Hash>& grams() const { return grams_; }

    std::size_t gram_length = 0;  // all grams share the scan's window length

private:
    std::unordered_map<Digest128, Info, Digest128Hash> grams_;
};

struct Generation {
    std::string id;
    TokenSeq tokens;
};

struct ScanResult {
    std::vector<MatchReport> reports;
    UniqueGramSet grams;
    std::uint64_t total_tokens = 0;
    std::uint64_t memorized_tokens = 0;
    std::uint64_t window_hits = 0;              // raw matched windows before merging
    std::uint64_t entropy_filtered_windows = 0;  // skipped below entropy_min

    double percent_memorized() const {
        return total_tokens == 0 ? 0.0
                                 : 100.0 * static_cast<double>(memorized_tokens) /
                                       static_cast<double>(total_tokens);
    }
};

/// Shannon entropy in bits of the empirical token distribution of `window`.
double window_entropy(TokenSpan window);

/// Slide k-token windows over each generation; a window is memorized iff it
/// passes the entropy filter and occurs in the corpus within one document.
ScanResult scan(const std::vector<Generation>& generations, const SuffixIndex& index,
                const MatchConfig& cfg, std::size_t workers = 1);

/// Matched-window counts per k, same entropy filter. k values must be
/// <= index.k_max().
std::vector<std::pair<std::size_t, std::uint64_t>> k_sensitivity(
    const std::vector<Generation>& generations, const SuffixIndex& index,
    const std::vector<std::size_t>& k_values, double entropy_min = 2.0);

/// Histogram of corpus occurrence counts over the unique grams, decade
/// buckets 1, 2-9, 10-99, ...
struct DuplicateHistogram {
    std::vector<std::pair<std::string, std::uint64_t>> buckets;
    std::uint64_t total = 0;
};

DuplicateHistogram duplicate_profile(const UniqueGramSet& grams, const SuffixIndex& index);

/// Generations from {"id","tokens"} / {"id","text"} JSONL or plain text
/// (one generation per line, tokenized with the corpus tokenizer).
std::vector<Generation> load_generations(const std::filesystem::path& path,
                                         Tokenizer& tokenizer);

void save_matches(const ScanResult& result, const std::filesystem::path& path,
                  const std::string& meta_line = "");
std::vector<MatchReport> load_matches(const std::filesystem::path& path);
void save_grams(const UniqueGramSet& grams, const std::filesystem::path& path,
                const std::string& meta_line = "");
UniqueGramSet load_grams(const std::filesystem::path& path);

}  // namespace memaudit
