#pragma once

#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace memaudit {

/// Token identifiers are held as 32-bit values in memory regardless of the
/// on-disk width. The sentinel for a given width is the maximum representable
/// id and never appears inside a document.
using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

enum class TokenWidth : int { w16 = 2, w32 = 4 };

constexpr TokenId sentinel_for(TokenWidth w) {
    return w == TokenWidth::w16 ? 0xFFFFu : 0xFFFFFFFFu;
}

constexpr std::size_t bytes_per_token(TokenWidth w) {
    return static_cast<std::size_t>(w);
}

/// 128-bit digest used for document dedup keys and k-gram identity.
struct Digest128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend bool operator==(const Digest128&, const Digest128&) = default;
    friend auto operator<=>(const Digest128&, const Digest128&) = default;
};

/// FNV-1a over the raw bytes, widened to 128 bits.
inline Digest128 digest_bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    unsigned __int128 h = (static_cast<unsigned __int128>(0x6c62272e07bb0142ULL) << 64) |
                          0x62b821756295c58dULL;
    const unsigned __int128 prime = (static_cast<unsigned __int128>(0x0000000001000000ULL) << 64) |
                                    0x000000000000013BULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= prime;
    }
    return {static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)};
}

inline Digest128 digest_tokens(TokenSpan tokens) {
    return digest_bytes(tokens.data(), tokens.size() * sizeof(TokenId));
}

inline Digest128 digest_string(const std::string& s) {
    return digest_bytes(s.data(), s.size());
}

std::string to_hex(const Digest128& d);
Digest128 digest_from_hex(const std::string& hex);

struct Digest128Hash {
    std::size_t operator()(const Digest128& d) const noexcept {
        return static_cast<std::size_t>(d.hi ^ (d.lo * 0x9E3779B97F4A7C15ULL));
    }
};

}  // namespace memaudit
