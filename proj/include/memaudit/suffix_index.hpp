#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

/// One contiguous corpus region with its lexicographically sorted suffix
/// offsets. The region extends k_max-1 tokens past the primary range it owns,
/// so every window of up to k_max tokens lies wholly inside some shard.
/// Occurrence counts are attributed to the shard whose primary range holds
/// the window's first token, which removes seam double-counting.
struct Shard {
    std::uint32_t shard_id = 0;
    std::uint64_t start = 0;        // absolute corpus offset of tokens[0]
    std::uint64_t primary_len = 0;  // tokens owned (start attribution)
    TokenSeq tokens;                // primary range plus seam overlap
    std::vector<std::uint32_t> suffixes;
};

class SuffixIndex {
public:
    /// Sorts every shard's suffixes; parallel across shards up to `workers`.
    static SuffixIndex build(const CorpusStream& corpus, std::size_t shard_count,
                             std::size_t k_max, std::size_t workers = 1,
                             int offset_width = 32);

    /// True iff query occurs contiguously in the corpus without crossing a
    /// document boundary. Queries must not exceed k_max (seam guarantee).
    bool contains(TokenSpan query) const;

    /// Length of the longest prefix of query present in the corpus; exact for
    /// prefixes up to k_max, 0 if the first token never occurs.
    std::size_t longest_match(TokenSpan query) const;

    /// Exact occurrence count, seam-deduplicated by absolute offset.
    std::uint64_t count_occurrences(TokenSpan query) const;

    /// Absolute corpus offsets of every occurrence (seam-deduplicated).
    std::vector<std::uint64_t> locate(TokenSpan query) const;

    /// One witness occurrence (lowest absolute offset in the first shard with
    /// a hit), or nullopt. Cheaper than locate for existence-plus-witness.
    std::optional<std::uint64_t> first_occurrence(TokenSpan query) const;

    TokenSpan corpus_window(std::uint64_t offset, std::size_t len) const;

    std::size_t k_max() const { return k_max_; }
    std::size_t shard_count() const { return shards_.size(); }
    std::uint64_t corpus_len() const { return corpus_len_; }
    TokenWidth token_width() const { return width_; }
    const Digest128& corpus_digest() const { return corpus_digest_; }
    const std::vector<Shard>& shards() const { return shards_; }

    /// Re-checks the sorted/permutation invariants; throws DataError.
    void verify() const;

    void save(const std::filesystem::path& dir) const;
    static SuffixIndex load(const std::filesystem::path& dir);

private:
    struct Hit {
        const Shard* shard;
        std::size_t lo, hi;  // matching range in shard->suffixes
    };
    Hit shard_range(const Shard& shard, TokenSpan query) const;
    void check_query(TokenSpan query) const;

    std::vector<Shard> shards_;
    std::size_t k_max_ = 0;
    std::uint64_t corpus_len_ = 0;
    int offset_width_ = 32;
    TokenWidth width_ = TokenWidth::w16;
    TokenId sentinel_ = sentinel_for(TokenWidth::w16);
    Digest128 corpus_digest_{};
};

}  // namespace memaudit
