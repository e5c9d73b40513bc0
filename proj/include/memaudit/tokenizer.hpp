#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memaudit/types.hpp"

namespace memaudit {

enum class TokenizerScheme { ByteLevel, WhitespaceWord, ExternalVocab };

TokenizerScheme scheme_from_string(const std::string& name);
std::string scheme_to_string(TokenizerScheme scheme);

/// Deterministic pluggable tokenizer. Byte-level is the default and the only
/// scheme with an exact decode(encode(s)) == s round trip. The whitespace
/// scheme interns words in first-seen order, so the vocabulary depends only
/// on the input sequence. External vocabularies encode by greedy longest
/// match.
class Tokenizer {
public:
    static Tokenizer byte_level();
    static Tokenizer whitespace_word();
    static Tokenizer external_vocab(std::map<TokenId, std::string> vocab);

    TokenizerScheme scheme() const { return scheme_; }
    std::size_t vocab_size() const;

    TokenSeq encode(std::string_view text);

    /// As encode, also reporting each token's byte range [start, end) in the
    /// input. Used to map PII character spans onto token windows.
    TokenSeq encode_with_offsets(std::string_view text, std::vector<std::size_t>& starts,
                                 std::vector<std::size_t>& ends);

    /// Throws DataError on a sentinel or unknown id.
    std::string decode(TokenSpan tokens) const;

    /// Word/external vocab persistence (id -> surface form).
    std::map<TokenId, std::string> vocab_table() const;
    static Tokenizer restore(TokenizerScheme scheme, std::map<TokenId, std::string> vocab);

    /// Default-constructed tokenizer is byte-level.
    Tokenizer() = default;

private:
    TokenizerScheme scheme_ = TokenizerScheme::ByteLevel;
    std::vector<std::string> id_to_word_;
    std::unordered_map<std::string, TokenId> word_to_id_;
    // external-vocab encode: candidates per leading byte, longest first
    std::unordered_map<char, std::vector<std::pair<std::string, TokenId>>> by_first_byte_;
};

}  // namespace memaudit
