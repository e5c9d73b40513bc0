#include "memaudit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"

namespace memaudit {

using nlohmann::json;

namespace {
constexpr std::uint64_t kMaxDocumentTokens = 1ull << 31;
}

std::size_t CorpusStream::doc_index_at(std::uint64_t offset) const {
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), offset);
    return static_cast<std::size_t>(it - boundaries.begin()) - 1;
}

bool CorpusStream::window_in_document(std::uint64_t offset, std::uint64_t len) const {
    if (offset + len > tokens.size()) return false;
    const auto& entry = manifest[doc_index_at(offset)];
    return offset >= entry.offset && offset + len <= entry.offset + entry.length;
}

std::string normalize_text(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

Digest128 dedup_key(const Document& doc, Tokenizer& tokenizer, bool normalize) {
    if (!normalize) return digest_tokens(doc.tokens);
    const TokenSeq normalized = tokenizer.encode(normalize_text(doc.raw_text));
    return digest_tokens(normalized);
}

IngestResult ingest_documents(std::vector<std::pair<std::string, std::string>> docs,
                              const IngestConfig& cfg) {
    Tokenizer tokenizer = [&] {
        switch (cfg.scheme) {
            case TokenizerScheme::ByteLevel: return Tokenizer::byte_level();
            case TokenizerScheme::WhitespaceWord: return Tokenizer::whitespace_word();
            case TokenizerScheme::ExternalVocab: {
                if (cfg.external_vocab_path.empty())
                    throw ConfigError("external-vocab scheme requires a vocab file");
                json v = json::parse(io::read_file(cfg.external_vocab_path));
                std::map<TokenId, std::string> table;
                for (auto& [key, value] : v.items())
                    table[static_cast<TokenId>(std::stoul(key))] = value.get<std::string>();
                return Tokenizer::external_vocab(std::move(table));
            }
        }
        return Tokenizer::byte_level();
    }();

    const TokenId sentinel = sentinel_for(cfg.width);

    IngestResult result;
    result.stream.width = cfg.width;
    result.stream.sentinel = sentinel;

    std::unordered_map<Digest128, std::string, Digest128Hash> seen;
    std::vector<Document> retained;

    for (auto& [doc_id, text] : docs) {
        Document doc;
        doc.doc_id = std::move(doc_id);
        doc.raw_text = std::move(text);
        doc.tokens = tokenizer.encode(doc.raw_text);
        if (doc.tokens.size() >= kMaxDocumentTokens)
            throw DataError("document exceeds 2^31 tokens: " + doc.doc_id);
        for (TokenId t : doc.tokens)
            if (t >= sentinel)
                throw ConfigError("token id " + std::to_string(t) +
                                  " does not fit the configured token width (document " +
                                  doc.doc_id + ")");
        const Digest128 key = dedup_key(doc, tokenizer, cfg.normalize);
        auto [it, inserted] = seen.emplace(key, doc.doc_id);
        if (!inserted) {
            result.dedup_log.push_back({doc.doc_id, it->second});
            continue;
        }
        retained.push_back(std::move(doc));
    }

    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        if (i > 0) {
            result.stream.tokens.push_back(sentinel);
            ++offset;
        }
        result.stream.boundaries.push_back(offset);
        result.stream.manifest.push_back(
            {retained[i].doc_id, offset, retained[i].tokens.size()});
        result.stream.tokens.insert(result.stream.tokens.end(), retained[i].tokens.begin(),
                                    retained[i].tokens.end());
        offset += retained[i].tokens.size();
    }

    result.tokenizer = std::move(tokenizer);
    return result;
}

std::vector<std::pair<std::string, std::string>> load_source(const std::filesystem::path& source) {
    namespace fs = std::filesystem;
    std::vector<std::pair<std::string, std::string>> docs;
    std::error_code ec;
    if (fs::is_directory(source, ec)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(source))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) docs.emplace_back(f.stem().string(), io::read_file(f));
        return docs;
    }
    if (!fs::is_regular_file(source, ec))
        throw DataError("unreadable corpus source: " + source.string());
    for (const auto& line : io::read_lines(source)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("text"))
            throw DataError("malformed document line in " + source.string());
        docs.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
    }
    return docs;
}

IngestResult ingest(const std::filesystem::path& source, const IngestConfig& cfg) {
    return ingest_documents(load_source(source), cfg);
}

void save_corpus(const IngestResult& result, const IngestConfig& cfg,
                 const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    io::write_tokens(dir / "corpus.tokens", result.stream.tokens, result.stream.width);

    std::string manifest;
    for (const auto& e : result.stream.manifest) {
        json j{{"id", e.doc_id}, {"offset", e.offset}, {"length", e.length}};
        manifest += j.dump();
        manifest.push_back('\n');
    }
    io::write_file(dir / "corpus.manifest.jsonl", manifest);

    std::string dedup;
    for (const auto& d : result.dedup_log) {
        json j{{"dropped", d.dropped}, {"kept", d.kept}};
        dedup += j.dump();
        dedup.push_back('\n');
    }
    io::write_file(dir / "corpus.dedup.log", dedup);

    json meta{{"scheme", scheme_to_string(cfg.scheme)},
              {"token_width_bits", cfg.width == TokenWidth::w16 ? 16 : 32},
              {"normalize", cfg.normalize},
              {"token_count", result.stream.tokens.size()},
              {"document_count", result.stream.manifest.size()},
              {"vocab_size", result.tokenizer.vocab_size()},
              {"tokens_digest", to_hex(io::digest_file(dir / "corpus.tokens"))}};
    io::write_file(dir / "corpus.meta.json", meta.dump(2) + "\n");

    if (cfg.scheme != TokenizerScheme::ByteLevel) {
        json vocab = json::object();
        for (const auto& [id, word] : result.tokenizer.vocab_table())
            vocab[std::to_string(id)] = word;
        io::write_file(dir / "corpus.vocab.json", vocab.dump() + "\n");
    }
}

LoadedCorpus load_corpus(const std::filesystem::path& dir) {
    json meta = json::parse(io::read_file(dir / "corpus.meta.json"));
    LoadedCorpus out;
    const int width_bits = meta.at("token_width_bits").get<int>();
    out.stream.width = width_bits == 16 ? TokenWidth::w16 : TokenWidth::w32;
    out.stream.sentinel = sentinel_for(out.stream.width);
    out.normalize = meta.value("normalize", true);
    out.stream.tokens = io::read_tokens(dir / "corpus.tokens", out.stream.width);
    out.token_file_digest = io::digest_file(dir / "corpus.tokens");
    if (to_hex(out.token_file_digest) != meta.at("tokens_digest").get<std::string>())
        throw DataError("corpus.tokens does not match the digest in corpus.meta.json");

    for (const auto& line : io::read_lines(dir / "corpus.manifest.jsonl")) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ManifestEntry e{j.at("id").get<std::string>(), j.at("offset").get<std::uint64_t>(),
                        j.at("length").get<std::uint64_t>()};
        out.stream.boundaries.push_back(e.offset);
        out.stream.manifest.push_back(std::move(e));
    }

    const auto scheme = scheme_from_string(meta.at("scheme").get<std::string>());
    std::map<TokenId, std::string> vocab;
    if (scheme != TokenizerScheme::ByteLevel) {
        json v = json::parse(io::read_file(dir / "corpus.vocab.json"));
        for (auto& [key, value] : v.items())
            vocab[static_cast<TokenId>(std::stoul(key))] = value.get<std::string>();
    }
    out.tokenizer = Tokenizer::restore(scheme, std::move(vocab));
    return out;
}

}  // namespace memaudit
