#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "memaudit/corpus.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/rng.hpp"

using namespace memaudit;
namespace fs = std::filesystem;

namespace {
IngestConfig byte_cfg() {
    IngestConfig cfg;
    cfg.scheme = TokenizerScheme::ByteLevel;
    cfg.width = TokenWidth::w16;
    return cfg;
}
}  // namespace

TEST_CASE("two byte-identical documents: second dropped") {
    auto r = ingest_documents({{"d1", "same text"}, {"d2", "same text"}}, byte_cfg());
    REQUIRE(r.stream.manifest.size() == 1);
    CHECK(r.stream.manifest[0].doc_id == "d1");
    REQUIRE(r.dedup_log.size() == 1);
    CHECK(r.dedup_log[0].dropped == "d2");
    CHECK(r.dedup_log[0].kept == "d1");
}

TEST_CASE("concatenation with sentinel: ab + cd") {
    auto r = ingest_documents({{"d1", "ab"}, {"d2", "cd"}}, byte_cfg());
    const TokenId s = sentinel_for(TokenWidth::w16);
    CHECK(r.stream.tokens == TokenSeq{'a', 'b', s, 'c', 'd'});
    CHECK(r.stream.boundaries == std::vector<std::uint64_t>{0, 3});
}

TEST_CASE("trailing-whitespace duplicate dropped under normalization") {
    // Normalizer applied by hand: "The rain falls" and "The rain falls \n"
    // both collapse to "the rain falls"; doc3 is distinct.
    auto cfg = byte_cfg();
    cfg.normalize = true;
    auto r = ingest_documents(
        {{"d1", "The rain falls"}, {"d2", "The rain falls \n"}, {"d3", "Other text"}}, cfg);
    REQUIRE(r.stream.manifest.size() == 2);
    CHECK(r.stream.manifest[0].doc_id == "d1");
    CHECK(r.stream.manifest[1].doc_id == "d3");
    REQUIRE(r.dedup_log.size() == 1);
    CHECK(r.dedup_log[0].dropped == "d2");

    SUBCASE("normalization off keeps all three") {
        cfg.normalize = false;
        auto r2 = ingest_documents(
            {{"d1", "The rain falls"}, {"d2", "The rain falls \n"}, {"d3", "Other text"}}, cfg);
        CHECK(r2.stream.manifest.size() == 3);
    }
}

TEST_CASE("dedup_key normalization equivalence") {
    auto tok = Tokenizer::byte_level();
    Document a{"a", "A  b", tok.encode("A  b")};
    Document b{"b", "a b", tok.encode("a b")};
    CHECK(dedup_key(a, tok, true) == dedup_key(b, tok, true));
    CHECK(dedup_key(a, tok, false) != dedup_key(b, tok, false));
}

TEST_CASE("dedup keys collision-free over 10k random docs") {
    Rng rng(99);
    auto tok = Tokenizer::byte_level();
    std::set<Digest128> keys;
    for (int i = 0; i < 10000; ++i) {
        std::string text = "doc-" + std::to_string(i) + ":";
        for (int j = 0; j < 24; ++j)
            text.push_back(static_cast<char>('a' + rng.uniform(26)));
        Document d{"d", text, tok.encode(text)};
        keys.insert(dedup_key(d, tok, true));
    }
    CHECK(keys.size() == 10000);
}

TEST_CASE("manifest offsets locate documents contiguously") {
    auto r = ingest_documents({{"a", "xy"}, {"b", "pqr"}, {"c", "z"}}, byte_cfg());
    for (const auto& e : r.stream.manifest) {
        for (std::uint64_t i = 0; i < e.length; ++i)
            CHECK(r.stream.tokens[e.offset + i] != r.stream.sentinel);
    }
    // total retained + sentinels == stream length
    std::uint64_t retained = 0;
    for (const auto& e : r.stream.manifest) retained += e.length;
    CHECK(retained + (r.stream.manifest.size() - 1) == r.stream.tokens.size());
    CHECK(!r.stream.window_in_document(2, 1));      // offset 2 is the sentinel
    CHECK(!r.stream.window_in_document(1, 2));      // "y" + sentinel crosses
    CHECK(r.stream.window_in_document(3, 3));       // "pqr"
}

TEST_CASE("vocab overflow is a configuration error") {
    auto cfg = byte_cfg();
    cfg.scheme = TokenizerScheme::WhitespaceWord;
    std::string text;
    // 16-bit width reserves 0xFFFF for the sentinel; 65535 distinct words overflow.
    for (int i = 0; i < 65536; ++i) text += "w" + std::to_string(i) + " ";
    CHECK_THROWS_AS((void)ingest_documents({{"d", text}}, cfg), ConfigError);
}

TEST_CASE("ingest is deterministic and round-trips through save/load") {
    const fs::path dir = fs::temp_directory_path() / "memaudit_corpus_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "src");
    std::ofstream(dir / "src" / "b.txt") << "second document";
    std::ofstream(dir / "src" / "a.txt") << "first document";

    auto cfg = byte_cfg();
    auto r1 = ingest(dir / "src", cfg);
    auto r2 = ingest(dir / "src", cfg);
    CHECK(r1.stream.tokens == r2.stream.tokens);
    CHECK(r1.stream.manifest.size() == 2);
    CHECK(r1.stream.manifest[0].doc_id == "a");  // sorted by filename

    save_corpus(r1, cfg, dir / "out");
    auto loaded = load_corpus(dir / "out");
    CHECK(loaded.stream.tokens == r1.stream.tokens);
    CHECK(loaded.stream.manifest.size() == 2);
    CHECK(loaded.tokenizer.decode(TokenSeq{'h', 'i'}) == "hi");

    // byte-identical outputs across repeated saves
    const auto digest_a = io::digest_file(dir / "out" / "corpus.tokens");
    save_corpus(r2, cfg, dir / "out2");
    CHECK(io::digest_file(dir / "out2" / "corpus.tokens") == digest_a);
    fs::remove_all(dir);
}

TEST_CASE("unreadable source names the path") {
    try {
        (void)ingest("/nonexistent/memaudit-nope", byte_cfg());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("memaudit-nope") != std::string::npos);
    }
}

TEST_CASE("jsonl source") {
    const fs::path dir = fs::temp_directory_path() / "memaudit_jsonl_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "docs.jsonl") << R"({"id":"x","text":"alpha"})" << "\n"
                                      << R"({"id":"y","text":"beta"})" << "\n";
    auto r = ingest(dir / "docs.jsonl", byte_cfg());
    REQUIRE(r.stream.manifest.size() == 2);
    CHECK(r.stream.manifest[0].doc_id == "x");
    fs::remove_all(dir);
}
