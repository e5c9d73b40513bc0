#include <doctest.h>

#include <filesystem>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/suffix_index.hpp"
#include "oracle.hpp"

using namespace memaudit;
namespace fs = std::filesystem;

namespace {

CorpusStream stream_from_tokens(TokenSeq tokens) {
    CorpusStream s;
    s.width = TokenWidth::w32;
    s.sentinel = sentinel_for(s.width);
    s.tokens = std::move(tokens);
    s.boundaries = {0};
    s.manifest = {{"doc0", 0, s.tokens.size()}};
    return s;
}

CorpusStream stream_from_text(const std::string& text) {
    TokenSeq tokens;
    for (char c : text) tokens.push_back(static_cast<unsigned char>(c));
    return stream_from_tokens(std::move(tokens));
}

TokenSeq random_tokens(Rng& rng, std::size_t n, TokenId vocab) {
    TokenSeq t(n);
    for (auto& x : t) x = static_cast<TokenId>(rng.uniform(vocab));
    return t;
}

}  // namespace

TEST_CASE("banana suffix order") {
    auto corpus = stream_from_text("banana");
    auto index = SuffixIndex::build(corpus, 1, 6);
    REQUIRE(index.shards().size() == 1);
    CHECK(index.shards()[0].suffixes == std::vector<std::uint32_t>{5, 3, 1, 0, 4, 2});
    index.verify();
}

TEST_CASE("repeated token: shorter suffixes first") {
    auto corpus = stream_from_text("aaaa");
    auto index = SuffixIndex::build(corpus, 1, 4);
    CHECK(index.shards()[0].suffixes == std::vector<std::uint32_t>{3, 2, 1, 0});
}

TEST_CASE("contains on banana") {
    auto corpus = stream_from_text("banana");
    auto index = SuffixIndex::build(corpus, 1, 6);
    TokenSeq ana{'a', 'n', 'a'};
    TokenSeq nab{'n', 'a', 'b'};
    CHECK(index.contains(ana));
    CHECK(!index.contains(nab));
    CHECK(index.count_occurrences(TokenSeq{'a', 'n'}) == 2);
}

TEST_CASE("document boundary blocks matches") {
    // two docs "ab" and "cd": "bc" must not match across the sentinel
    CorpusStream s;
    s.width = TokenWidth::w16;
    s.sentinel = sentinel_for(s.width);
    s.tokens = {'a', 'b', s.sentinel, 'c', 'd'};
    s.boundaries = {0, 3};
    s.manifest = {{"d1", 0, 2}, {"d2", 3, 2}};
    auto index = SuffixIndex::build(s, 1, 4);
    CHECK(!index.contains(TokenSeq{'b', 'c'}));
    CHECK(index.contains(TokenSeq{'c', 'd'}));
    CHECK(index.count_occurrences(TokenSeq{'b', 'c'}) == 0);
}

TEST_CASE("query contract errors") {
    auto corpus = stream_from_text("abcdefgh");
    auto index = SuffixIndex::build(corpus, 1, 4);
    TokenSeq too_long{'a', 'b', 'c', 'd', 'e'};
    CHECK_THROWS_AS((void)index.contains(too_long), ConfigError);
    TokenSeq with_sentinel{'a', sentinel_for(TokenWidth::w32)};
    CHECK_THROWS_AS((void)index.contains(with_sentinel), DataError);
}

TEST_CASE("oracle equivalence over random corpora and shard counts") {
    Rng rng(7);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 2000 + rng.uniform(30000);
        const std::size_t shards = 1 + rng.uniform(8);
        const TokenId vocab = trial % 2 == 0 ? 7 : 300;  // heavy repeats vs sparse
        auto corpus = stream_from_tokens(random_tokens(rng, n, vocab));
        const std::size_t k_max = 50;
        auto index = SuffixIndex::build(corpus, shards, k_max, 2);
        index.verify();
        for (int probe = 0; probe < 120; ++probe) {
            TokenSeq q;
            if (rng.bernoulli(0.5)) {
                const std::size_t len = 1 + rng.uniform(k_max);
                const std::size_t pos = rng.uniform(n - len);
                q.assign(corpus.tokens.begin() + pos, corpus.tokens.begin() + pos + len);
            } else {
                q = random_tokens(rng, 1 + rng.uniform(k_max), vocab + 2);
            }
            CAPTURE(trial);
            CAPTURE(probe);
            CHECK(index.contains(q) == oracle::contains(corpus.tokens, q));
            CHECK(index.count_occurrences(q) == oracle::count_occurrences(corpus.tokens, q));
            CHECK(index.longest_match(q) == oracle::longest_match(corpus.tokens, q));
        }
    }
}

TEST_CASE("interior windows always found") {
    Rng rng(11);
    auto corpus = stream_from_tokens(random_tokens(rng, 60000, 1000));
    auto index = SuffixIndex::build(corpus, 4, 50, 2);
    for (int probe = 0; probe < 200; ++probe) {
        const std::size_t pos = rng.uniform(corpus.tokens.size() - 50);
        TokenSpan w(corpus.tokens.data() + pos, 50);
        CHECK(index.contains(w));
        CHECK(index.count_occurrences(w) >= 1);
        CHECK(index.longest_match(w) == 50);
    }
}

TEST_CASE("locate returns seam-deduplicated absolute offsets") {
    Rng rng(13);
    auto corpus = stream_from_tokens(random_tokens(rng, 5000, 5));
    auto index = SuffixIndex::build(corpus, 7, 12);
    for (int probe = 0; probe < 50; ++probe) {
        const std::size_t len = 3 + rng.uniform(8);
        const std::size_t pos = rng.uniform(corpus.tokens.size() - len);
        TokenSeq q(corpus.tokens.begin() + pos, corpus.tokens.begin() + pos + len);
        auto offsets = index.locate(q);
        std::vector<std::uint64_t> expect;
        for (std::size_t i = 0; i + len <= corpus.tokens.size(); ++i)
            if (oracle::match_at(corpus.tokens, i, q)) expect.push_back(i);
        CHECK(offsets == expect);
    }
}

TEST_CASE("results independent of shard count") {
    Rng rng(17);
    auto corpus = stream_from_tokens(random_tokens(rng, 20000, 40));
    auto i1 = SuffixIndex::build(corpus, 1, 20);
    auto i5 = SuffixIndex::build(corpus, 5, 20);
    for (int probe = 0; probe < 100; ++probe) {
        TokenSeq q = random_tokens(rng, 1 + rng.uniform(20), 41);
        CHECK(i1.contains(q) == i5.contains(q));
        CHECK(i1.count_occurrences(q) == i5.count_occurrences(q));
        CHECK(i1.longest_match(q) == i5.longest_match(q));
    }
}

TEST_CASE("save/load round trip is byte-deterministic") {
    Rng rng(23);
    auto corpus = stream_from_tokens(random_tokens(rng, 3000, 200));
    corpus.width = TokenWidth::w32;
    auto index = SuffixIndex::build(corpus, 3, 16);
    const fs::path dir = fs::temp_directory_path() / "memaudit_index_test";
    fs::remove_all(dir);
    index.save(dir / "a");
    index.save(dir / "b");
    for (const auto* name : {"index.meta.json", "shard-0.sa", "shard-1.tokens"})
        CHECK(io::digest_file(dir / "a" / name) == io::digest_file(dir / "b" / name));

    auto loaded = SuffixIndex::load(dir / "a");
    loaded.verify();
    CHECK(loaded.k_max() == 16);
    for (int probe = 0; probe < 40; ++probe) {
        TokenSeq q = random_tokens(rng, 1 + rng.uniform(16), 201);
        CHECK(loaded.contains(q) == index.contains(q));
        CHECK(loaded.count_occurrences(q) == index.count_occurrences(q));
    }
    fs::remove_all(dir);
}

TEST_CASE("empty corpus rejected") {
    CorpusStream s;
    s.width = TokenWidth::w32;
    CHECK_THROWS_AS((void)SuffixIndex::build(s, 1, 4), DataError);
}
