#include <doctest.h>

#include <cmath>
#include <set>

#include "memaudit/errors.hpp"
#include "memaudit/match_scan.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/suffix_index.hpp"
#include "memaudit/synth_model.hpp"

using namespace memaudit;

namespace {

CorpusStream random_corpus(std::uint64_t seed, std::size_t n, TokenId vocab,
                           std::size_t docs = 1) {
    Rng rng(seed);
    CorpusStream s;
    s.width = TokenWidth::w32;
    s.sentinel = sentinel_for(s.width);
    const std::size_t per_doc = n / docs;
    for (std::size_t d = 0; d < docs; ++d) {
        if (d > 0) s.tokens.push_back(s.sentinel);
        const std::uint64_t off = s.tokens.size();
        for (std::size_t i = 0; i < per_doc; ++i)
            s.tokens.push_back(static_cast<TokenId>(rng.uniform(vocab)));
        s.boundaries.push_back(off);
        s.manifest.push_back({"doc" + std::to_string(d), off, per_doc});
    }
    return s;
}

}  // namespace

TEST_CASE("pool spans come verbatim from the corpus") {
    auto corpus = random_corpus(3, 5000, 500);
    auto index = SuffixIndex::build(corpus, 2, 64, 2);
    SynthModelConfig cfg;
    cfg.pool_size = 20;
    cfg.span_length = 50;
    cfg.seed = 5;
    auto model = SynthModel::build(corpus, cfg);
    REQUIRE(model.pool().size() == 20);
    for (const auto& span : model.pool()) {
        CHECK(index.contains(model.span_tokens(span)));
        CHECK(corpus.window_in_document(span.offset, span.length));
    }
}

TEST_CASE("pool capacity boundary") {
    auto corpus = random_corpus(7, 1000, 100, 4);  // 4 docs x 250 tokens
    const std::size_t cap = SynthModel::max_pool_size(corpus, 50);
    CHECK(cap == 4 * (250 / 50));
    SynthModelConfig cfg;
    cfg.span_length = 50;
    cfg.pool_size = cap;
    CHECK(SynthModel::build(corpus, cfg).pool().size() == cap);
    cfg.pool_size = cap + 1;
    CHECK_THROWS_AS((void)SynthModel::build(corpus, cfg), DataError);
}

TEST_CASE("p=0 output never touches the corpus") {
    auto corpus = random_corpus(11, 20000, 300);
    auto index = SuffixIndex::build(corpus, 2, 64, 2);
    SynthModelConfig cfg;
    cfg.pool_size = 10;
    cfg.span_length = 50;
    cfg.emit_prob = 0.0;
    cfg.seed = 13;
    auto model = SynthModel::build(corpus, cfg);
    auto out = model.generate(TokenSeq{}, 20000, 1);
    std::set<TokenId> filler(model.filler_alphabet().begin(), model.filler_alphabet().end());
    for (TokenId t : out)
        if (filler.count(t) != 1) {
            FAIL("non-filler token in p=0 output");
            break;
        }

    MatchConfig mc;
    mc.k = 50;
    auto result = scan({{"g", out}}, index, mc);
    CHECK(result.memorized_tokens == 0);
    CHECK(result.grams.unique_count() == 0);
}

TEST_CASE("p=1 single-span generation emits one pool span") {
    auto corpus = random_corpus(17, 5000, 500);
    SynthModelConfig cfg;
    cfg.pool_size = 5;
    cfg.span_length = 50;
    cfg.emit_prob = 1.0;
    cfg.seed = 19;
    auto model = SynthModel::build(corpus, cfg);
    auto out = model.generate(TokenSeq{}, 50, 2);
    bool is_pool_span = false;
    for (const auto& span : model.pool())
        if (TokenSeq(model.span_tokens(span).begin(), model.span_tokens(span).end()) == out)
            is_pool_span = true;
    CHECK(is_pool_span);
}

TEST_CASE("measured memorized fraction tracks the configured expectation") {
    auto corpus = random_corpus(23, 50000, 2000);
    auto index = SuffixIndex::build(corpus, 2, 64, 2);
    SynthModelConfig cfg;
    cfg.pool_size = 200;
    cfg.span_length = 50;
    cfg.emit_prob = 0.1;
    cfg.seed = 29;
    auto model = SynthModel::build(corpus, cfg);
    auto out = model.generate(TokenSeq{}, 100000, 3);

    MatchConfig mc;
    mc.k = 50;
    auto result = scan({{"g", out}}, index, mc, 2);
    const double measured =
        static_cast<double>(result.memorized_tokens) / static_cast<double>(result.total_tokens);
    const double expected = expected_memorized_fraction(cfg.emit_prob, cfg.span_length);
    CHECK(std::abs(measured - expected) / expected < 0.10);
}

TEST_CASE("generation is deterministic under seed") {
    auto corpus = random_corpus(31, 10000, 500);
    SynthModelConfig cfg;
    cfg.pool_size = 50;
    cfg.span_length = 20;
    cfg.emit_prob = 0.3;
    cfg.seed = 37;
    auto model = SynthModel::build(corpus, cfg);
    TokenSeq prompt{model.filler_alphabet()[0]};
    CHECK(model.generate(prompt, 5000, 9) == model.generate(prompt, 5000, 9));
    CHECK(model.generate(prompt, 5000, 9) != model.generate(prompt, 5000, 10));
}

TEST_CASE("repeat hazard curve: high before, low after, monotone") {
    auto corpus = random_corpus(41, 5000, 300);
    SynthModelConfig cfg;
    cfg.pool_size = 10;
    cfg.span_length = 20;
    cfg.seed = 43;
    cfg.divergence.repeat_threshold_mean = 250.0;
    cfg.divergence.repeat_threshold_spread = 50.0;
    auto model = SynthModel::build(corpus, cfg);
    const TokenId word = 7;

    CHECK(model.repeat_continue_prob(word, 100) >= 0.99);
    CHECK(model.repeat_continue_prob(word, 199) >= 0.99);
    CHECK(model.repeat_continue_prob(word, 301) <= 0.01);
    CHECK(model.repeat_continue_prob(word, 500) <= 0.001);

    double prev = 1.0;
    for (std::uint64_t n = 1; n <= 600; n += 5) {
        const double p = model.repeat_continue_prob(word, n);
        CHECK(p <= prev + 1e-12);
        prev = p;
    }

    // next_token_prob agrees with the hazard on repeat contexts
    TokenSeq ctx(150, word);
    CHECK(model.next_token_prob(ctx, word) ==
          doctest::Approx(model.repeat_continue_prob(word, 150)).epsilon(1e-6));
}

TEST_CASE("next_token_prob sums to 1 over the token universe") {
    auto corpus = random_corpus(47, 8000, 400);
    SynthModelConfig cfg;
    cfg.pool_size = 30;
    cfg.span_length = 25;
    cfg.emit_prob = 0.2;
    cfg.seed = 53;
    cfg.divergence.boost = 3.0;
    auto model = SynthModel::build(corpus, cfg);

    std::set<TokenId> universe(model.filler_alphabet().begin(), model.filler_alphabet().end());
    for (const auto& span : model.pool()) universe.insert(model.span_tokens(span).front());

    SUBCASE("base context") {
        TokenSeq ctx{model.filler_alphabet()[1], model.filler_alphabet()[2]};
        double total = 0.0;
        for (TokenId t : universe) total += model.next_token_prob(ctx, t);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("repeat context") {
        TokenSeq ctx(240, 9);
        auto with_word = universe;
        with_word.insert(9);
        double total = 0.0;
        for (TokenId t : with_word) total += model.next_token_prob(ctx, t);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("prefix completion reproduces pool spans exactly") {
    auto corpus = random_corpus(59, 20000, 1500);
    SynthModelConfig cfg;
    cfg.pool_size = 40;
    cfg.span_length = 80;
    cfg.emit_prob = 0.0;
    cfg.seed = 61;
    cfg.complete_prefixes = true;
    auto model = SynthModel::build(corpus, cfg);
    for (const auto& span : model.pool()) {
        auto tokens = model.span_tokens(span);
        TokenSpan prefix(tokens.data(), tokens.size() - 50);
        auto out = model.generate(prefix, 50, 0);
        CHECK(TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(tokens.size() - 50),
                       tokens.end()) == out);
    }

    SUBCASE("completion off falls back to filler") {
        cfg.complete_prefixes = false;
        auto plain = SynthModel::build(corpus, cfg);
        const auto& span = plain.pool()[0];
        auto tokens = plain.span_tokens(span);
        TokenSpan prefix(tokens.data(), tokens.size() - 50);
        auto out = plain.generate(prefix, 50, 0);
        CHECK(TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(tokens.size() - 50),
                       tokens.end()) != out);
    }
}

TEST_CASE("ground truth files written") {
    auto corpus = random_corpus(67, 4000, 200);
    SynthModelConfig cfg;
    cfg.pool_size = 8;
    cfg.span_length = 30;
    cfg.seed = 71;
    auto model = SynthModel::build(corpus, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "memaudit_synth_test";
    std::filesystem::remove_all(dir);
    model.save_ground_truth(dir);
    CHECK(std::filesystem::exists(dir / "synth.groundtruth.json"));
    CHECK(std::filesystem::exists(dir / "synth.config.json"));
    std::filesystem::remove_all(dir);
}
