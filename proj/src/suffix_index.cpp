#include "memaudit/suffix_index.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/kernels.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

using nlohmann::json;

namespace {

TokenSpan suffix_span(const Shard& shard, std::size_t local) {
    return TokenSpan(shard.tokens.data() + local, shard.tokens.size() - local);
}

/// Compare a shard suffix against the query, looking at most query.size()
/// tokens. A suffix shorter than the query compares less when it is a prefix.
int prefix_compare(TokenSpan suffix, TokenSpan query) {
    const std::size_t n = std::min(suffix.size(), query.size());
    const std::size_t lcp = kernels::find_mismatch(suffix.data(), query.data(), n);
    if (lcp < n) return suffix[lcp] < query[lcp] ? -1 : 1;
    return suffix.size() < query.size() ? -1 : 0;
}

void sort_shard(Shard& shard) {
    shard.suffixes.resize(shard.tokens.size());
    for (std::size_t i = 0; i < shard.suffixes.size(); ++i)
        shard.suffixes[i] = static_cast<std::uint32_t>(i);
    const TokenId* base = shard.tokens.data();
    const std::size_t len = shard.tokens.size();
    std::sort(shard.suffixes.begin(), shard.suffixes.end(),
              [base, len](std::uint32_t a, std::uint32_t b) {
                  return kernels::compare_spans(TokenSpan(base + a, len - a),
                                                TokenSpan(base + b, len - b)) < 0;
              });
}

}  // namespace

SuffixIndex SuffixIndex::build(const CorpusStream& corpus, std::size_t shard_count,
                               std::size_t k_max, std::size_t workers, int offset_width) {
    if (corpus.tokens.empty()) throw DataError("cannot index an empty corpus");
    if (shard_count < 1) throw ConfigError("shard_count must be >= 1");
    if (k_max < 2) throw ConfigError("k_max must be >= 2");
    if (offset_width != 32 && offset_width != 64)
        throw ConfigError("offset width must be 32 or 64");
    const std::uint64_t n = corpus.tokens.size();
    if (offset_width == 32 && n >= (1ull << 32))
        throw ConfigError("corpus exceeds 32-bit offsets; rebuild with offset_width=64");

    SuffixIndex index;
    index.k_max_ = k_max;
    index.corpus_len_ = n;
    index.offset_width_ = offset_width;
    index.width_ = corpus.width;
    index.sentinel_ = corpus.sentinel;
    index.corpus_digest_ =
        digest_bytes(corpus.tokens.data(), corpus.tokens.size() * sizeof(TokenId));

    const std::uint64_t sc = std::min<std::uint64_t>(shard_count, n);
    const std::uint64_t overlap = k_max - 1;
    std::uint64_t start = 0;
    for (std::uint64_t i = 0; i < sc; ++i) {
        Shard shard;
        shard.shard_id = static_cast<std::uint32_t>(i);
        shard.start = start;
        shard.primary_len = n / sc + (i < n % sc ? 1 : 0);
        const std::uint64_t end = std::min(n, start + shard.primary_len + overlap);
        if (end - start >= (1ull << 32))
            throw ConfigError("shard exceeds 32-bit local offsets; use more shards");
        shard.tokens.assign(corpus.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                            corpus.tokens.begin() + static_cast<std::ptrdiff_t>(end));
        start += shard.primary_len;
        index.shards_.push_back(std::move(shard));
    }

    parallel_for(index.shards_.size(), workers,
                 [&](std::size_t i) { sort_shard(index.shards_[i]); });
    return index;
}

void SuffixIndex::check_query(TokenSpan query) const {
    if (query.empty()) throw ConfigError("empty query");
    if (query.size() > k_max_)
        throw ConfigError("query length " + std::to_string(query.size()) +
                          " exceeds k_max=" + std::to_string(k_max_) +
                          "; the seam guarantee does not cover it");
    for (TokenId t : query)
        if (t == sentinel_) throw DataError("query contains the sentinel token");
}

SuffixIndex::Hit SuffixIndex::shard_range(const Shard& shard, TokenSpan query) const {
    const auto& sa = shard.suffixes;
    // First suffix whose query-length prefix is >= query, then > query.
    auto lo = std::lower_bound(sa.begin(), sa.end(), query,
                               [&](std::uint32_t s, TokenSpan q) {
                                   return prefix_compare(suffix_span(shard, s), q) < 0;
                               });
    auto hi = std::upper_bound(lo, sa.end(), query,
                               [&](TokenSpan q, std::uint32_t s) {
                                   return prefix_compare(suffix_span(shard, s), q) > 0;
                               });
    return {&shard, static_cast<std::size_t>(lo - sa.begin()),
            static_cast<std::size_t>(hi - sa.begin())};
}

bool SuffixIndex::contains(TokenSpan query) const {
    check_query(query);
    for (const auto& shard : shards_) {
        const Hit hit = shard_range(shard, query);
        if (hit.lo < hit.hi) return true;
    }
    return false;
}

std::uint64_t SuffixIndex::count_occurrences(TokenSpan query) const {
    check_query(query);
    std::uint64_t count = 0;
    for (const auto& shard : shards_) {
        const Hit hit = shard_range(shard, query);
        for (std::size_t i = hit.lo; i < hit.hi; ++i)
            if (shard.suffixes[i] < shard.primary_len) ++count;
    }
    return count;
}

std::vector<std::uint64_t> SuffixIndex::locate(TokenSpan query) const {
    check_query(query);
    std::vector<std::uint64_t> offsets;
    for (const auto& shard : shards_) {
        const Hit hit = shard_range(shard, query);
        for (std::size_t i = hit.lo; i < hit.hi; ++i)
            if (shard.suffixes[i] < shard.primary_len)
                offsets.push_back(shard.start + shard.suffixes[i]);
    }
    std::sort(offsets.begin(), offsets.end());
    return offsets;
}

std::optional<std::uint64_t> SuffixIndex::first_occurrence(TokenSpan query) const {
    check_query(query);
    for (const auto& shard : shards_) {
        const Hit hit = shard_range(shard, query);
        if (hit.lo >= hit.hi) continue;
        std::uint64_t best = UINT64_MAX;
        for (std::size_t i = hit.lo; i < hit.hi; ++i)
            best = std::min(best, shard.start + shard.suffixes[i]);
        return best;
    }
    return std::nullopt;
}

std::size_t SuffixIndex::longest_match(TokenSpan query) const {
    if (query.empty()) return 0;
    std::size_t best = 0;
    for (const auto& shard : shards_) {
        const auto& sa = shard.suffixes;
        // The suffixes sharing the longest prefix with the query sit next to
        // its insertion point in sorted order.
        auto pos = std::lower_bound(sa.begin(), sa.end(), query,
                                    [&](std::uint32_t s, TokenSpan q) {
                                        return kernels::compare_spans(suffix_span(shard, s), q) < 0;
                                    });
        if (pos != sa.end())
            best = std::max(best, kernels::common_prefix(suffix_span(shard, *pos), query));
        if (pos != sa.begin())
            best = std::max(best, kernels::common_prefix(suffix_span(shard, *(pos - 1)), query));
    }
    return best;
}

TokenSpan SuffixIndex::corpus_window(std::uint64_t offset, std::size_t len) const {
    for (const auto& shard : shards_) {
        if (offset >= shard.start && offset + len <= shard.start + shard.tokens.size())
            return TokenSpan(shard.tokens.data() + (offset - shard.start), len);
    }
    throw DataError("corpus window [" + std::to_string(offset) + ", +" + std::to_string(len) +
                    ") not resident in any shard");
}

void SuffixIndex::verify() const {
    std::uint64_t covered = 0;
    for (const auto& shard : shards_) {
        if (shard.suffixes.size() != shard.tokens.size())
            throw DataError("shard " + std::to_string(shard.shard_id) +
                            ": suffix count != token count");
        std::vector<bool> seen(shard.suffixes.size(), false);
        for (std::uint32_t s : shard.suffixes) {
            if (s >= shard.suffixes.size() || seen[s])
                throw DataError("shard " + std::to_string(shard.shard_id) +
                                ": suffixes are not a permutation");
            seen[s] = true;
        }
        for (std::size_t i = 1; i < shard.suffixes.size(); ++i) {
            if (kernels::compare_spans(suffix_span(shard, shard.suffixes[i - 1]),
                                       suffix_span(shard, shard.suffixes[i])) >= 0)
                throw DataError("shard " + std::to_string(shard.shard_id) +
                                ": suffix order violated at rank " + std::to_string(i));
        }
        covered += shard.primary_len;
    }
    if (covered != corpus_len_) throw DataError("shard primary ranges do not cover the corpus");
}

void SuffixIndex::save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json shard_table = json::array();
    for (const auto& shard : shards_) {
        io::write_tokens(dir / ("shard-" + std::to_string(shard.shard_id) + ".tokens"),
                         shard.tokens, width_);
        io::write_offsets(dir / ("shard-" + std::to_string(shard.shard_id) + ".sa"),
                          shard.suffixes, offset_width_);
        shard_table.push_back({{"id", shard.shard_id},
                               {"start", shard.start},
                               {"primary_len", shard.primary_len},
                               {"total_len", shard.tokens.size()}});
    }
    json meta{{"token_width_bits", width_ == TokenWidth::w16 ? 16 : 32},
              {"offset_width_bits", offset_width_},
              {"k_max", k_max_},
              {"corpus_len", corpus_len_},
              {"corpus_digest", to_hex(corpus_digest_)},
              {"shards", shard_table}};
    io::write_file(dir / "index.meta.json", meta.dump(2) + "\n");
}

SuffixIndex SuffixIndex::load(const std::filesystem::path& dir) {
    json meta = json::parse(io::read_file(dir / "index.meta.json"));
    SuffixIndex index;
    index.width_ = meta.at("token_width_bits").get<int>() == 16 ? TokenWidth::w16 : TokenWidth::w32;
    index.sentinel_ = sentinel_for(index.width_);
    index.offset_width_ = meta.at("offset_width_bits").get<int>();
    index.k_max_ = meta.at("k_max").get<std::size_t>();
    index.corpus_len_ = meta.at("corpus_len").get<std::uint64_t>();
    index.corpus_digest_ = digest_from_hex(meta.at("corpus_digest").get<std::string>());
    for (const auto& row : meta.at("shards")) {
        Shard shard;
        shard.shard_id = row.at("id").get<std::uint32_t>();
        shard.start = row.at("start").get<std::uint64_t>();
        shard.primary_len = row.at("primary_len").get<std::uint64_t>();
        const auto expect_len = row.at("total_len").get<std::uint64_t>();
        shard.tokens = io::read_tokens(dir / ("shard-" + std::to_string(shard.shard_id) + ".tokens"),
                                       index.width_);
        shard.suffixes = io::read_offsets(dir / ("shard-" + std::to_string(shard.shard_id) + ".sa"),
                                          index.offset_width_);
        if (shard.tokens.size() != expect_len || shard.suffixes.size() != expect_len)
            throw DataError("shard " + std::to_string(shard.shard_id) +
                            " file lengths do not match index.meta.json");
        index.shards_.push_back(std::move(shard));
    }
    return index;
}

}  // namespace memaudit
