#include <doctest.h>

#include "memaudit/pii_scan.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/suffix_index.hpp"

using namespace memaudit;

namespace {
std::size_t count_kind(const std::vector<PiiFinding>& fs, PiiKind kind) {
    std::size_t n = 0;
    for (const auto& f : fs) n += f.kind == kind ? 1 : 0;
    return n;
}
}  // namespace

TEST_CASE("canonical email") {
    auto fs = find_pii("contact: a.b@example.com for details");
    REQUIRE(count_kind(fs, PiiKind::Email) == 1);
    for (const auto& f : fs)
        if (f.kind == PiiKind::Email) CHECK(f.surface == "a.b@example.com");
}

TEST_CASE("obfuscated email") {
    auto fs = find_pii("reach me at sam AT gmail DOT com thanks");
    REQUIRE(count_kind(fs, PiiKind::ObfuscatedEmail) == 1);
    for (const auto& f : fs)
        if (f.kind == PiiKind::ObfuscatedEmail) CHECK(f.surface == "sam AT gmail DOT com");
}

TEST_CASE("two phone formats in one line") {
    auto fs = find_pii("call 555-0100 x22 or +1 (555) 010-0000 today");
    CHECK(count_kind(fs, PiiKind::Phone) == 2);
}

TEST_CASE("urls and handles") {
    auto fs = find_pii("see https://example.org/p?q=1 and ping @some_handle please");
    CHECK(count_kind(fs, PiiKind::Url) == 1);
    CHECK(count_kind(fs, PiiKind::Handle) == 1);
    // the email's domain must not double as a handle
    auto fs2 = find_pii("write to a.b@example.com");
    CHECK(count_kind(fs2, PiiKind::Handle) == 0);
}

TEST_CASE("address-like heuristic") {
    auto fs = find_pii("ship to 742 Evergreen Terrace Lane before friday");
    CHECK(count_kind(fs, PiiKind::AddressLike) >= 1);
}

TEST_CASE("findings are position-sorted and offsets match the text") {
    const std::string text = "x a@b.co y @handle z https://e.f/g";
    auto fs = find_pii(text);
    for (std::size_t i = 1; i < fs.size(); ++i) CHECK(fs[i - 1].begin <= fs[i].begin);
    for (const auto& f : fs) CHECK(text.substr(f.begin, f.end - f.begin) == f.surface);
}

TEST_CASE("verification separates planted from hallucinated PII") {
    // corpus with PII planted inside long sentences; generations regurgitate
    // half of them verbatim and hallucinate the rest
    Rng rng(211);
    auto pad = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + rng.uniform(26)));
        return s;
    };
    std::vector<std::string> planted, hallucinated;
    std::string corpus_text;
    for (int i = 0; i < 10; ++i) {
        const std::string sentence = "user" + std::to_string(i) + pad(20) + "@mail-a" +
                                     std::to_string(i) + ".com " + pad(40);
        planted.push_back(sentence);
        corpus_text += sentence + " " + pad(30) + " ";
    }
    for (int i = 0; i < 10; ++i)
        hallucinated.push_back("fake" + std::to_string(i) + pad(20) + "@mail-b" +
                               std::to_string(i) + ".org " + pad(40));

    auto tok = Tokenizer::byte_level();
    CorpusStream stream;
    stream.width = TokenWidth::w16;
    stream.sentinel = sentinel_for(stream.width);
    stream.tokens = tok.encode(corpus_text);
    stream.boundaries = {0};
    stream.manifest = {{"doc0", 0, stream.tokens.size()}};
    auto index = SuffixIndex::build(stream, 1, 64);

    std::vector<Generation> gens;
    for (int i = 0; i < 10; ++i) gens.push_back({"p" + std::to_string(i), tok.encode(planted[i])});
    for (int i = 0; i < 10; ++i)
        gens.push_back({"h" + std::to_string(i), tok.encode(hallucinated[i])});

    MatchConfig cfg;
    cfg.k = 50;
    auto out = scan_pii(gens, tok, index, cfg);
    CHECK(out.summary.candidates == 20);
    CHECK(out.summary.verified == 10);
    CHECK(out.summary.candidate_precision() == doctest::Approx(0.5));
    CHECK(out.summary.generations_with_verified == 10);
    for (const auto& f : out.findings) {
        if (f.generation_id[0] == 'p') CHECK(f.verified);
        if (f.generation_id[0] == 'h') CHECK(!f.verified);
    }
}

TEST_CASE("verification only annotates") {
    auto before = find_pii("mail zz@qq.dd now");
    auto copy = before;
    CorpusStream stream;
    stream.width = TokenWidth::w16;
    stream.sentinel = sentinel_for(stream.width);
    auto tok = Tokenizer::byte_level();
    stream.tokens = tok.encode("completely unrelated corpus content that is long enough to index");
    stream.boundaries = {0};
    stream.manifest = {{"doc0", 0, stream.tokens.size()}};
    auto index = SuffixIndex::build(stream, 1, 64);

    std::vector<std::size_t> starts, ends;
    auto tokens = tok.encode_with_offsets("mail zz@qq.dd now", starts, ends);
    verify_pii(copy, tokens, starts, ends, index, MatchConfig{});
    REQUIRE(copy.size() == before.size());
    for (std::size_t i = 0; i < copy.size(); ++i) {
        CHECK(copy[i].begin == before[i].begin);
        CHECK(!copy[i].verified);
    }
}
