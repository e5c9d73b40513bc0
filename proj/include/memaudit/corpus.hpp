#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "memaudit/tokenizer.hpp"
#include "memaudit/types.hpp"

namespace memaudit {

struct Document {
    std::string doc_id;
    std::string raw_text;
    TokenSeq tokens;
};

struct ManifestEntry {
    std::string doc_id;
    std::uint64_t offset = 0;  // token offset of the document start
    std::uint64_t length = 0;  // token count
};

struct DedupRecord {
    std::string dropped;
    std::string kept;
};

/// All retained documents concatenated, separated by the sentinel token.
struct CorpusStream {
    TokenSeq tokens;
    std::vector<std::uint64_t> boundaries;  // document start offsets, first is 0
    std::vector<ManifestEntry> manifest;
    TokenWidth width = TokenWidth::w16;
    TokenId sentinel = sentinel_for(TokenWidth::w16);

    /// Index of the document containing the token at `offset`.
    std::size_t doc_index_at(std::uint64_t offset) const;

    /// True when [offset, offset+len) stays inside one document.
    bool window_in_document(std::uint64_t offset, std::uint64_t len) const;
};

struct IngestConfig {
    TokenizerScheme scheme = TokenizerScheme::ByteLevel;
    TokenWidth width = TokenWidth::w16;
    bool normalize = true;
    std::filesystem::path external_vocab_path;  // required for external-vocab
};

struct IngestResult {
    CorpusStream stream;
    std::vector<DedupRecord> dedup_log;
    Tokenizer tokenizer;
};

/// Lowercase and collapse whitespace runs; the dedup normal form.
std::string normalize_text(const std::string& text);

/// Digest of the normalized (per config) token sequence of one document.
Digest128 dedup_key(const Document& doc, Tokenizer& tokenizer, bool normalize);

/// Ingest pre-loaded documents in the given order: tokenize, exact-dedup on
/// the normalized text, concatenate with sentinels. First occurrence of a
/// duplicate group wins.
IngestResult ingest_documents(std::vector<std::pair<std::string, std::string>> docs,
                              const IngestConfig& cfg);

/// Load documents from a directory of .txt files (sorted by filename) or a
/// .jsonl file with {"id", "text"} per line.
std::vector<std::pair<std::string, std::string>> load_source(const std::filesystem::path& source);

IngestResult ingest(const std::filesystem::path& source, const IngestConfig& cfg);

/// Persistence: corpus.tokens, corpus.manifest.jsonl, corpus.dedup.log,
/// corpus.meta.json (and corpus.vocab.json for vocab-bearing schemes).
void save_corpus(const IngestResult& result, const IngestConfig& cfg,
                 const std::filesystem::path& dir);

struct LoadedCorpus {
    CorpusStream stream;
    Tokenizer tokenizer;
    Digest128 token_file_digest;
    bool normalize = true;
};

LoadedCorpus load_corpus(const std::filesystem::path& dir);

}  // namespace memaudit
