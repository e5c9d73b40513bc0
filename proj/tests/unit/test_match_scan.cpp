#include <doctest.h>

#include <cmath>

#include "memaudit/errors.hpp"
#include "memaudit/match_scan.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/suffix_index.hpp"

using namespace memaudit;

namespace {

CorpusStream make_corpus(Rng& rng, std::size_t n, TokenId vocab_lo, TokenId vocab_hi) {
    CorpusStream s;
    s.width = TokenWidth::w32;
    s.sentinel = sentinel_for(s.width);
    s.tokens.resize(n);
    for (auto& t : s.tokens)
        t = vocab_lo + static_cast<TokenId>(rng.uniform(vocab_hi - vocab_lo));
    s.boundaries = {0};
    s.manifest = {{"doc0", 0, n}};
    return s;
}

TokenSeq filler(Rng& rng, std::size_t n, TokenId lo, TokenId hi) {
    TokenSeq t(n);
    for (auto& x : t) x = lo + static_cast<TokenId>(rng.uniform(hi - lo));
    return t;
}

}  // namespace

TEST_CASE("window entropy") {
    TokenSeq same(50, 7);
    CHECK(window_entropy(same) == doctest::Approx(0.0));
    TokenSeq alt;
    for (int i = 0; i < 50; ++i) alt.push_back(i % 2);
    CHECK(window_entropy(alt) == doctest::Approx(1.0));
    TokenSeq distinct;
    for (int i = 0; i < 50; ++i) distinct.push_back(static_cast<TokenId>(i));
    CHECK(window_entropy(distinct) == doctest::Approx(std::log2(50.0)));
}

TEST_CASE("60-token copy: one maximal span, 11 unique 50-grams") {
    Rng rng(31);
    auto corpus = make_corpus(rng, 20000, 0, 1000);
    auto index = SuffixIndex::build(corpus, 2, 64, 2);

    Generation gen;
    gen.id = "g0";
    gen.tokens = filler(rng, 30, 2000, 3000);  // alphabet disjoint from corpus
    const std::size_t copy_pos = 500;
    gen.tokens.insert(gen.tokens.end(), corpus.tokens.begin() + copy_pos,
                      corpus.tokens.begin() + copy_pos + 60);
    auto tail = filler(rng, 30, 2000, 3000);
    gen.tokens.insert(gen.tokens.end(), tail.begin(), tail.end());

    MatchConfig cfg;
    cfg.k = 50;
    auto result = scan({gen}, index, cfg);
    REQUIRE(result.reports.size() == 1);
    const auto& report = result.reports[0];
    REQUIRE(report.matched_spans.size() == 1);
    CHECK(report.matched_spans[0].start == 30);
    CHECK(report.matched_spans[0].length == 60);
    CHECK(report.memorized_token_count == 60);
    CHECK(result.grams.unique_count() == 11);
    CHECK(result.window_hits == 11);

    SUBCASE("span is maximal: one-token extensions do not match") {
        const auto& span = report.matched_spans[0];
        // left extension
        TokenSeq left(gen.tokens.begin() + span.start - 1,
                      gen.tokens.begin() + span.start - 1 + cfg.k);
        CHECK(!index.contains(left));
        // right extension
        TokenSeq right(gen.tokens.begin() + span.start + span.length - cfg.k + 1,
                       gen.tokens.begin() + span.start + span.length + 1);
        CHECK(!index.contains(right));
    }

    SUBCASE("k sweep on the planted match") {
        auto table = k_sensitivity({gen}, index, {50, 60, 61});
        REQUIRE(table.size() == 3);
        CHECK(table[0] == std::pair<std::size_t, std::uint64_t>{50, 11});
        CHECK(table[1] == std::pair<std::size_t, std::uint64_t>{60, 1});
        CHECK(table[2] == std::pair<std::size_t, std::uint64_t>{61, 0});
    }
}

TEST_CASE("identical-token generation is entropy-filtered") {
    // corpus that really contains a long constant run
    CorpusStream s;
    s.width = TokenWidth::w32;
    s.sentinel = sentinel_for(s.width);
    s.tokens.assign(200, 5);
    s.boundaries = {0};
    s.manifest = {{"doc0", 0, 200}};
    auto index = SuffixIndex::build(s, 1, 64);

    Generation gen{"g", TokenSeq(100, 5)};
    MatchConfig cfg;
    cfg.k = 50;
    auto result = scan({gen}, index, cfg);
    CHECK(result.reports[0].matched_spans.empty());
    CHECK(result.memorized_tokens == 0);
    CHECK(result.entropy_filtered_windows == 51);
}

TEST_CASE("generation shorter than k reports zero matches without error") {
    Rng rng(37);
    auto corpus = make_corpus(rng, 1000, 0, 50);
    auto index = SuffixIndex::build(corpus, 1, 50);
    Generation gen{"short", filler(rng, 10, 0, 50)};
    MatchConfig cfg;
    cfg.k = 50;
    auto result = scan({gen}, index, cfg);
    CHECK(result.reports[0].matched_spans.empty());
    CHECK(result.reports[0].total_token_count == 10);
}

TEST_CASE("scan rejects k above the seam guarantee") {
    Rng rng(41);
    auto corpus = make_corpus(rng, 1000, 0, 50);
    auto index = SuffixIndex::build(corpus, 2, 20);
    MatchConfig cfg;
    cfg.k = 21;
    CHECK_THROWS_AS((void)scan({}, index, cfg), ConfigError);
}

TEST_CASE("parallel scan equals serial scan") {
    Rng rng(43);
    auto corpus = make_corpus(rng, 30000, 0, 500);
    auto index = SuffixIndex::build(corpus, 3, 50, 2);
    std::vector<Generation> gens;
    for (int g = 0; g < 12; ++g) {
        Generation gen;
        gen.id = "g" + std::to_string(g);
        gen.tokens = filler(rng, 100, 600, 900);
        const std::size_t pos = rng.uniform(corpus.tokens.size() - 55);
        gen.tokens.insert(gen.tokens.end(), corpus.tokens.begin() + pos,
                          corpus.tokens.begin() + pos + 55);
        gens.push_back(std::move(gen));
    }
    MatchConfig cfg;
    cfg.k = 50;
    auto serial = scan(gens, index, cfg, 1);
    auto parallel = scan(gens, index, cfg, 4);
    CHECK(serial.memorized_tokens == parallel.memorized_tokens);
    CHECK(serial.window_hits == parallel.window_hits);
    CHECK(serial.grams.unique_count() == parallel.grams.unique_count());
    REQUIRE(serial.reports.size() == parallel.reports.size());
    for (std::size_t i = 0; i < serial.reports.size(); ++i) {
        CHECK(serial.reports[i].memorized_token_count ==
              parallel.reports[i].memorized_token_count);
        CHECK(serial.reports[i].matched_spans.size() ==
              parallel.reports[i].matched_spans.size());
    }
    // witness offsets must agree too (merge uses the minimum)
    for (const auto& [digest, info] : serial.grams.grams()) {
        auto it = parallel.grams.grams().find(digest);
        REQUIRE(it != parallel.grams.grams().end());
        CHECK(it->second.observations == info.observations);
        CHECK(it->second.witness_offset == info.witness_offset);
    }
}

TEST_CASE("duplicate_profile buckets by corpus occurrence count") {
    // corpus with a block planted 1x, 5x, and 12x
    Rng rng(47);
    TokenSeq once = filler(rng, 10, 0, 100);
    TokenSeq five = filler(rng, 10, 100, 200);
    TokenSeq twelve = filler(rng, 10, 200, 300);
    CorpusStream s;
    s.width = TokenWidth::w32;
    s.sentinel = sentinel_for(s.width);
    auto pad = [&](TokenId base) { return filler(rng, 7, 400 + base, 500 + base); };
    auto append = [&](const TokenSeq& block) {
        s.tokens.insert(s.tokens.end(), block.begin(), block.end());
        auto p = pad(static_cast<TokenId>(s.tokens.size() % 97));
        s.tokens.insert(s.tokens.end(), p.begin(), p.end());
    };
    append(once);
    for (int i = 0; i < 5; ++i) append(five);
    for (int i = 0; i < 12; ++i) append(twelve);
    s.boundaries = {0};
    s.manifest = {{"doc0", 0, s.tokens.size()}};
    auto index = SuffixIndex::build(s, 1, 16);

    std::vector<Generation> gens;
    gens.push_back({"a", once});
    gens.push_back({"b", five});
    gens.push_back({"c", twelve});
    MatchConfig cfg;
    cfg.k = 10;
    cfg.entropy_min = 0.0;
    auto result = scan(gens, index, cfg);
    REQUIRE(result.grams.unique_count() == 3);

    auto hist = duplicate_profile(result.grams, index);
    CHECK(hist.total == 3);
    REQUIRE(hist.buckets.size() == 3);
    CHECK(hist.buckets[0] == std::pair<std::string, std::uint64_t>{"1", 1});
    CHECK(hist.buckets[1] == std::pair<std::string, std::uint64_t>{"2-9", 1});
    CHECK(hist.buckets[2] == std::pair<std::string, std::uint64_t>{"10-99", 1});
}

TEST_CASE("unique gram observations accumulate across generations") {
    Rng rng(53);
    auto corpus = make_corpus(rng, 5000, 0, 200);
    auto index = SuffixIndex::build(corpus, 1, 20);
    TokenSeq gram(corpus.tokens.begin() + 100, corpus.tokens.begin() + 110);
    std::vector<Generation> gens;
    for (int i = 0; i < 3; ++i) gens.push_back({"g" + std::to_string(i), gram});
    MatchConfig cfg;
    cfg.k = 10;
    cfg.entropy_min = 0.0;
    auto result = scan(gens, index, cfg);
    REQUIRE(result.grams.unique_count() == 1);
    CHECK(result.grams.total_observations() == 3);
    CHECK(result.grams.grams().begin()->second.observations == 3);
}
