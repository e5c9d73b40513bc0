#include "memaudit/tokenizer.hpp"

#include <algorithm>
#include <cctype>

#include "memaudit/errors.hpp"

namespace memaudit {

TokenizerScheme scheme_from_string(const std::string& name) {
    if (name == "byte" || name == "byte-level") return TokenizerScheme::ByteLevel;
    if (name == "word" || name == "whitespace-word") return TokenizerScheme::WhitespaceWord;
    if (name == "external" || name == "external-vocab") return TokenizerScheme::ExternalVocab;
    throw ConfigError("unknown tokenizer scheme: " + name);
}

std::string scheme_to_string(TokenizerScheme scheme) {
    switch (scheme) {
        case TokenizerScheme::ByteLevel: return "byte-level";
        case TokenizerScheme::WhitespaceWord: return "whitespace-word";
        case TokenizerScheme::ExternalVocab: return "external-vocab";
    }
    return "byte-level";
}

Tokenizer Tokenizer::byte_level() {
    Tokenizer t;
    t.scheme_ = TokenizerScheme::ByteLevel;
    return t;
}

Tokenizer Tokenizer::whitespace_word() {
    Tokenizer t;
    t.scheme_ = TokenizerScheme::WhitespaceWord;
    return t;
}

Tokenizer Tokenizer::external_vocab(std::map<TokenId, std::string> vocab) {
    Tokenizer t;
    t.scheme_ = TokenizerScheme::ExternalVocab;
    TokenId max_id = 0;
    for (const auto& [id, word] : vocab) max_id = std::max(max_id, id);
    t.id_to_word_.assign(max_id + 1, std::string());
    for (auto& [id, word] : vocab) {
        if (word.empty()) throw ConfigError("external vocab contains an empty token string");
        t.id_to_word_[id] = word;
        t.word_to_id_.emplace(word, id);
        t.by_first_byte_[word.front()].emplace_back(word, id);
    }
    for (auto& [first, cands] : t.by_first_byte_)
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
            return a.first < b.first;
        });
    return t;
}

std::size_t Tokenizer::vocab_size() const {
    switch (scheme_) {
        case TokenizerScheme::ByteLevel: return 256;
        default: return id_to_word_.size();
    }
}

TokenSeq Tokenizer::encode(std::string_view text) {
    std::vector<std::size_t> starts, ends;
    return encode_with_offsets(text, starts, ends);
}

TokenSeq Tokenizer::encode_with_offsets(std::string_view text, std::vector<std::size_t>& starts,
                                        std::vector<std::size_t>& ends) {
    starts.clear();
    ends.clear();
    TokenSeq out;
    switch (scheme_) {
        case TokenizerScheme::ByteLevel: {
            out.reserve(text.size());
            starts.reserve(text.size());
            ends.reserve(text.size());
            for (std::size_t i = 0; i < text.size(); ++i) {
                out.push_back(static_cast<unsigned char>(text[i]));
                starts.push_back(i);
                ends.push_back(i + 1);
            }
            return out;
        }
        case TokenizerScheme::WhitespaceWord: {
            std::size_t i = 0;
            while (i < text.size()) {
                while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
                if (i >= text.size()) break;
                std::size_t j = i;
                while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
                std::string word(text.substr(i, j - i));
                auto it = word_to_id_.find(word);
                TokenId id;
                if (it == word_to_id_.end()) {
                    id = static_cast<TokenId>(id_to_word_.size());
                    id_to_word_.push_back(word);
                    word_to_id_.emplace(std::move(word), id);
                } else {
                    id = it->second;
                }
                out.push_back(id);
                starts.push_back(i);
                ends.push_back(j);
                i = j;
            }
            return out;
        }
        case TokenizerScheme::ExternalVocab: {
            std::size_t i = 0;
            while (i < text.size()) {
                auto it = by_first_byte_.find(text[i]);
                bool matched = false;
                if (it != by_first_byte_.end()) {
                    for (const auto& [word, id] : it->second) {
                        if (text.substr(i).starts_with(word)) {
                            out.push_back(id);
                            starts.push_back(i);
                            ends.push_back(i + word.size());
                            i += word.size();
                            matched = true;
                            break;
                        }
                    }
                }
                if (!matched)
                    throw DataError("external vocab cannot encode input at byte " +
                                    std::to_string(i));
            }
            return out;
        }
    }
    return out;
}

std::string Tokenizer::decode(TokenSpan tokens) const {
    std::string out;
    for (TokenId t : tokens) {
        switch (scheme_) {
            case TokenizerScheme::ByteLevel:
                if (t > 0xFF) throw DataError("token id out of byte range in decode");
                out.push_back(static_cast<char>(t));
                break;
            case TokenizerScheme::WhitespaceWord:
                if (t >= id_to_word_.size()) throw DataError("unknown token id in decode");
                if (!out.empty()) out.push_back(' ');
                out += id_to_word_[t];
                break;
            case TokenizerScheme::ExternalVocab:
                if (t >= id_to_word_.size() || id_to_word_[t].empty())
                    throw DataError("unknown token id in decode");
                out += id_to_word_[t];
                break;
        }
    }
    return out;
}

std::map<TokenId, std::string> Tokenizer::vocab_table() const {
    std::map<TokenId, std::string> table;
    for (std::size_t i = 0; i < id_to_word_.size(); ++i)
        if (!id_to_word_[i].empty() || scheme_ == TokenizerScheme::WhitespaceWord)
            table.emplace(static_cast<TokenId>(i), id_to_word_[i]);
    return table;
}

Tokenizer Tokenizer::restore(TokenizerScheme scheme, std::map<TokenId, std::string> vocab) {
    switch (scheme) {
        case TokenizerScheme::ByteLevel: return byte_level();
        case TokenizerScheme::ExternalVocab: return external_vocab(std::move(vocab));
        case TokenizerScheme::WhitespaceWord: {
            Tokenizer t = whitespace_word();
            TokenId max_id = 0;
            for (const auto& [id, word] : vocab) max_id = std::max(max_id, id);
            if (!vocab.empty()) {
                t.id_to_word_.assign(max_id + 1, std::string());
                for (auto& [id, word] : vocab) {
                    t.id_to_word_[id] = word;
                    t.word_to_id_.emplace(word, id);
                }
            }
            return t;
        }
    }
    return byte_level();
}

}  // namespace memaudit
