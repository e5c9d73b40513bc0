#include "memaudit/types.hpp"

#include <stdexcept>

namespace memaudit {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

void hex_u64(std::uint64_t v, std::string& out) {
    for (int shift = 60; shift >= 0; shift -= 4) out.push_back(kHexDigits[(v >> shift) & 0xF]);
}

std::uint64_t parse_u64(const std::string& hex, std::size_t from) {
    std::uint64_t v = 0;
    for (std::size_t i = from; i < from + 16; ++i) {
        const char c = hex[i];
        v <<= 4;
        if (c >= '0' && c <= '9')
            v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f')
            v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F')
            v |= static_cast<std::uint64_t>(c - 'A' + 10);
        else
            throw std::invalid_argument("bad hex digit in digest");
    }
    return v;
}
}  // namespace

std::string to_hex(const Digest128& d) {
    std::string out;
    out.reserve(32);
    hex_u64(d.hi, out);
    hex_u64(d.lo, out);
    return out;
}

Digest128 digest_from_hex(const std::string& hex) {
    if (hex.size() != 32) throw std::invalid_argument("digest hex must be 32 chars");
    return {parse_u64(hex, 0), parse_u64(hex, 16)};
}

}  // namespace memaudit
