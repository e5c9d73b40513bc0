#include "memaudit/io_util.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace memaudit::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    auto out = open_out(path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_tokens(const std::filesystem::path& path, TokenSpan tokens, TokenWidth width) {
    auto out = open_out(path);
    const std::size_t bpt = bytes_per_token(width);
    std::vector<unsigned char> buf(tokens.size() * bpt);
    std::size_t j = 0;
    for (TokenId t : tokens) {
        for (std::size_t b = 0; b < bpt; ++b) buf[j++] = static_cast<unsigned char>(t >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

TokenSeq read_tokens(const std::filesystem::path& path, TokenWidth width) {
    const std::string raw = read_file(path);
    const std::size_t bpt = bytes_per_token(width);
    if (raw.size() % bpt != 0)
        throw IoError("token file length not a multiple of token width: " + path.string());
    TokenSeq tokens(raw.size() / bpt);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        TokenId t = 0;
        for (std::size_t b = 0; b < bpt; ++b)
            t |= static_cast<TokenId>(p[i * bpt + b]) << (8 * b);
        tokens[i] = t;
    }
    return tokens;
}

void write_offsets(const std::filesystem::path& path, const std::vector<std::uint32_t>& offsets,
                   int offset_width) {
    auto out = open_out(path);
    const std::size_t bpo = offset_width == 64 ? 8 : 4;
    std::vector<unsigned char> buf(offsets.size() * bpo);
    std::size_t j = 0;
    for (std::uint64_t v : offsets) {
        for (std::size_t b = 0; b < bpo; ++b) buf[j++] = static_cast<unsigned char>(v >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint32_t> read_offsets(const std::filesystem::path& path, int offset_width) {
    const std::string raw = read_file(path);
    const std::size_t bpo = offset_width == 64 ? 8 : 4;
    if (raw.size() % bpo != 0)
        throw IoError("offset file length not a multiple of offset width: " + path.string());
    std::vector<std::uint32_t> offsets(raw.size() / bpo);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        std::uint64_t v = 0;
        for (std::size_t b = 0; b < bpo; ++b)
            v |= static_cast<std::uint64_t>(p[i * bpo + b]) << (8 * b);
        offsets[i] = static_cast<std::uint32_t>(v);
    }
    return offsets;
}

Digest128 digest_file(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    return digest_bytes(raw.data(), raw.size());
}

}  // namespace memaudit::io
