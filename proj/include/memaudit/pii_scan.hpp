#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "memaudit/match_scan.hpp"
#include "memaudit/suffix_index.hpp"
#include "memaudit/tokenizer.hpp"

namespace memaudit {

enum class PiiKind { Email, ObfuscatedEmail, Phone, Url, Handle, AddressLike };

std::string pii_kind_name(PiiKind kind);

struct PiiFinding {
    std::string generation_id;
    PiiKind kind = PiiKind::Email;
    std::size_t begin = 0;  // byte range in the decoded text
    std::size_t end = 0;
    std::string surface;
    bool verified = false;
};

/// Apply the regex tier to one decoded generation. Overlapping findings of
/// different kinds are all reported; ordering is by position then kind.
/// Address-like hits are heuristic and should be treated as low-confidence.
std::vector<PiiFinding> find_pii(const std::string& text);

/// Mark findings whose covering k-token window occurs in the corpus.
/// Verification only annotates; it never adds or removes findings.
void verify_pii(std::vector<PiiFinding>& findings, TokenSpan tokens,
                const std::vector<std::size_t>& token_starts,
                const std::vector<std::size_t>& token_ends, const SuffixIndex& index,
                const MatchConfig& cfg);

struct PiiSummary {
    std::uint64_t generations = 0;
    std::uint64_t generations_with_verified = 0;
    std::uint64_t candidates = 0;
    std::uint64_t verified = 0;

    double generation_rate() const {
        return generations == 0 ? 0.0
                                : static_cast<double>(generations_with_verified) /
                                      static_cast<double>(generations);
    }
    double candidate_precision() const {
        return candidates == 0
                   ? 0.0
                   : static_cast<double>(verified) / static_cast<double>(candidates);
    }
};

struct PiiScanOutput {
    std::vector<PiiFinding> findings;
    PiiSummary summary;
};

/// Decode each generation, run the regex tier, verify against the index.
PiiScanOutput scan_pii(const std::vector<Generation>& generations, Tokenizer& tokenizer,
                       const SuffixIndex& index, const MatchConfig& cfg);

/// Plugin hook: externally supplied candidate spans (JSONL
/// {"id","kind","begin","end","surface"}) verified the same way.
std::vector<PiiFinding> load_candidates(const std::filesystem::path& path);

void save_findings(const std::vector<PiiFinding>& findings, const std::filesystem::path& path);
void save_pii_summary(const PiiSummary& summary, const std::filesystem::path& path);

}  // namespace memaudit
