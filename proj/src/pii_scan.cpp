#include "memaudit/pii_scan.hpp"

#include <algorithm>
#include <regex>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"

namespace memaudit {

using nlohmann::json;

std::string pii_kind_name(PiiKind kind) {
    switch (kind) {
        case PiiKind::Email: return "email";
        case PiiKind::ObfuscatedEmail: return "obfuscated-email";
        case PiiKind::Phone: return "phone";
        case PiiKind::Url: return "url";
        case PiiKind::Handle: return "handle";
        case PiiKind::AddressLike: return "address-like";
    }
    return "email";
}

namespace {

PiiKind kind_from_name(const std::string& name) {
    if (name == "email") return PiiKind::Email;
    if (name == "obfuscated-email") return PiiKind::ObfuscatedEmail;
    if (name == "phone") return PiiKind::Phone;
    if (name == "url") return PiiKind::Url;
    if (name == "handle") return PiiKind::Handle;
    if (name == "address-like") return PiiKind::AddressLike;
    throw DataError("unknown PII kind: " + name);
}

struct Pattern {
    PiiKind kind;
    std::regex re;
    int group;  // submatch carrying the finding (0 = whole match)
};

const std::vector<Pattern>& patterns() {
    static const std::vector<Pattern> p = [] {
        std::vector<Pattern> out;
        out.push_back({PiiKind::Email,
                       std::regex(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})"), 0});
        out.push_back(
            {PiiKind::ObfuscatedEmail,
             std::regex(
                 R"([A-Za-z0-9._]+\s+(?:AT|at|\[at\]|\(at\))\s+[A-Za-z0-9.-]+\s+(?:DOT|dot|\[dot\]|\(dot\))\s+[A-Za-z]{2,})"),
             0});
        // longer phone shapes first: ECMAScript alternation is first-match
        out.push_back(
            {PiiKind::Phone,
             std::regex(
                 R"(\+?\d{1,2}\s*\(\d{3}\)\s*\d{3}[-. ]?\d{4}|\(\d{3}\)\s*\d{3}[-.]?\d{4}|\b\d{3}[-.]\d{3}[-.]\d{4}\b|\b\d{3}[-.]\d{4}(?:\s*(?:x|ext\.?)\s*\d{1,5})?)"),
             0});
        out.push_back({PiiKind::Url,
                       std::regex(R"(https?://[^\s"'<>]+|\bwww\.[^\s"'<>]+)"), 0});
        // require a non-word lead-in so email domains do not double as handles
        out.push_back({PiiKind::Handle,
                       std::regex(R"((?:^|[\s,;:.!?(<\[])(@[A-Za-z0-9_]{2,}))"), 1});
        out.push_back(
            {PiiKind::AddressLike,
             std::regex(
                 R"(\b\d{1,5}\s+[A-Za-z]+(?:\s+[A-Za-z]+)?\s+(?:Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd|Lane|Ln|Drive|Dr|Court|Ct|Way)\b)",
                 std::regex::icase),
             0});
        return out;
    }();
    return p;
}

}  // namespace

std::vector<PiiFinding> find_pii(const std::string& text) {
    std::vector<PiiFinding> findings;
    for (const auto& pattern : patterns()) {
        auto begin = std::sregex_iterator(text.begin(), text.end(), pattern.re);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const auto& match = (*it)[pattern.group];
            if (!match.matched) continue;
            PiiFinding f;
            f.kind = pattern.kind;
            f.begin = static_cast<std::size_t>(match.first - text.begin());
            f.end = static_cast<std::size_t>(match.second - text.begin());
            f.surface = match.str();
            findings.push_back(std::move(f));
        }
    }
    std::sort(findings.begin(), findings.end(), [](const PiiFinding& a, const PiiFinding& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        if (a.end != b.end) return a.end < b.end;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return findings;
}

void verify_pii(std::vector<PiiFinding>& findings, TokenSpan tokens,
                const std::vector<std::size_t>& token_starts,
                const std::vector<std::size_t>& token_ends, const SuffixIndex& index,
                const MatchConfig& cfg) {
    const std::size_t k = cfg.k;
    for (auto& f : findings) {
        f.verified = false;
        if (tokens.size() < k) continue;
        // token range covering the byte span
        std::size_t t0 = tokens.size(), t1 = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (token_ends[i] > f.begin && token_starts[i] < f.end) {
                t0 = std::min(t0, i);
                t1 = std::max(t1, i);
            }
        }
        if (t0 > t1 || t1 - t0 + 1 > k) continue;
        const std::size_t w_lo = t1 >= k - 1 ? t1 - (k - 1) : 0;
        const std::size_t w_hi = std::min(t0, tokens.size() - k);
        for (std::size_t w = w_lo; w <= w_hi; ++w) {
            if (index.contains(TokenSpan(tokens.data() + w, k))) {
                f.verified = true;
                break;
            }
        }
    }
}

PiiScanOutput scan_pii(const std::vector<Generation>& generations, Tokenizer& tokenizer,
                       const SuffixIndex& index, const MatchConfig& cfg) {
    PiiScanOutput out;
    out.summary.generations = generations.size();
    for (const auto& gen : generations) {
        const std::string text = tokenizer.decode(gen.tokens);
        auto findings = find_pii(text);
        std::vector<std::size_t> starts, ends;
        const TokenSeq tokens = tokenizer.encode_with_offsets(text, starts, ends);
        verify_pii(findings, tokens, starts, ends, index, cfg);
        bool any_verified = false;
        for (auto& f : findings) {
            f.generation_id = gen.id;
            ++out.summary.candidates;
            if (f.verified) {
                ++out.summary.verified;
                any_verified = true;
            }
            out.findings.push_back(std::move(f));
        }
        if (any_verified) ++out.summary.generations_with_verified;
    }
    return out;
}

std::vector<PiiFinding> load_candidates(const std::filesystem::path& path) {
    std::vector<PiiFinding> findings;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        PiiFinding f;
        f.generation_id = j.value("id", "");
        f.kind = kind_from_name(j.at("kind").get<std::string>());
        f.begin = j.at("begin").get<std::size_t>();
        f.end = j.at("end").get<std::size_t>();
        f.surface = j.value("surface", "");
        findings.push_back(std::move(f));
    }
    return findings;
}

void save_findings(const std::vector<PiiFinding>& findings, const std::filesystem::path& path) {
    std::string out;
    for (const auto& f : findings) {
        json j{{"id", f.generation_id}, {"kind", pii_kind_name(f.kind)},
               {"begin", f.begin},     {"end", f.end},
               {"surface", f.surface}, {"verified", f.verified}};
        out += j.dump();
        out.push_back('\n');
    }
    io::write_file(path, out);
}

void save_pii_summary(const PiiSummary& summary, const std::filesystem::path& path) {
    json j{{"generations", summary.generations},
           {"generations_with_verified_pii", summary.generations_with_verified},
           {"generation_rate", summary.generation_rate()},
           {"candidates", summary.candidates},
           {"verified", summary.verified},
           {"candidate_precision", summary.candidate_precision()}};
    io::write_file(path, j.dump(2) + "\n");
}

}  // namespace memaudit
