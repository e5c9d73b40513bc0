#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "memaudit/types.hpp"

namespace memaudit::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);

std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Token arrays are stored little-endian at the configured width.
void write_tokens(const std::filesystem::path& path, TokenSpan tokens, TokenWidth width);
TokenSeq read_tokens(const std::filesystem::path& path, TokenWidth width);

/// Offset arrays (suffix entries) little-endian at 4 or 8 bytes per entry.
void write_offsets(const std::filesystem::path& path, const std::vector<std::uint32_t>& offsets,
                   int offset_width);
std::vector<std::uint32_t> read_offsets(const std::filesystem::path& path, int offset_width);

Digest128 digest_file(const std::filesystem::path& path);

}  // namespace memaudit::io
