#include "memaudit/match_scan.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

using nlohmann::json;

double window_entropy(TokenSpan window) {
    if (window.empty()) return 0.0;
    TokenSeq sorted(window.begin(), window.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double sum_clogc = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double c = static_cast<double>(j - i);
        sum_clogc += c * std::log2(c);
        i = j;
    }
    return std::log2(n) - sum_clogc / n;
}

namespace {

MatchReport scan_generation(const Generation& gen, const SuffixIndex& index,
                            const MatchConfig& cfg, UniqueGramSet& grams,
                            std::uint64_t& window_hits, std::uint64_t& entropy_filtered) {
    MatchReport report;
    report.generation_id = gen.id;
    report.total_token_count = gen.tokens.size();
    if (gen.tokens.size() < cfg.k) return report;

    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i + cfg.k <= gen.tokens.size(); i += cfg.stride) {
        const TokenSpan window(gen.tokens.data() + i, cfg.k);
        if (window_entropy(window) < cfg.entropy_min) {
            ++entropy_filtered;
            continue;
        }
        const auto witness = index.first_occurrence(window);
        if (!witness) continue;
        hits.push_back(i);
        const Digest128 digest = digest_tokens(window);
        report.window_digests.push_back(digest);
        grams.insert(digest, *witness);
        ++window_hits;
    }
    if (hits.empty()) return report;

    // Merge overlapping/adjacent windows into maximal spans for the
    // percent-token accounting. Every constituent window already fed the
    // unique-gram set above.
    std::size_t span_start = hits[0];
    std::size_t span_end = hits[0] + cfg.k;
    auto flush = [&] {
        const TokenSpan first_gram(gen.tokens.data() + span_start, cfg.k);
        report.matched_spans.push_back(
            {span_start, span_end - span_start, index.count_occurrences(first_gram)});
        report.memorized_token_count += span_end - span_start;
    };
    for (std::size_t h = 1; h < hits.size(); ++h) {
        if (hits[h] <= span_end) {
            span_end = hits[h] + cfg.k;
        } else {
            flush();
            span_start = hits[h];
            span_end = hits[h] + cfg.k;
        }
    }
    flush();
    return report;
}

}  // namespace

ScanResult scan(const std::vector<Generation>& generations, const SuffixIndex& index,
                const MatchConfig& cfg, std::size_t workers) {
    if (cfg.k < 2) throw ConfigError("match window k must be >= 2");
    if (cfg.stride < 1) throw ConfigError("stride must be >= 1");
    if (cfg.k > index.k_max())
        throw ConfigError("k=" + std::to_string(cfg.k) + " exceeds index k_max=" +
                          std::to_string(index.k_max()) +
                          "; the seam guarantee does not cover it");

    ScanResult result;
    result.reports.resize(generations.size());
    result.grams.gram_length = cfg.k;

    const std::size_t pool = std::max<std::size_t>(1, std::min(workers, generations.size()));
    if (pool <= 1) {
        for (std::size_t i = 0; i < generations.size(); ++i)
            result.reports[i] =
                scan_generation(generations[i], index, cfg, result.grams, result.window_hits,
                                result.entropy_filtered_windows);
    } else {
        struct Local {
            UniqueGramSet grams;
            std::uint64_t hits = 0;
            std::uint64_t filtered = 0;
        };
        std::vector<Local> locals(generations.size());
        parallel_for(generations.size(), pool, [&](std::size_t i) {
            result.reports[i] = scan_generation(generations[i], index, cfg, locals[i].grams,
                                                locals[i].hits, locals[i].filtered);
        });
        for (const auto& local : locals) {
            result.grams.merge(local.grams);
            result.window_hits += local.hits;
            result.entropy_filtered_windows += local.filtered;
        }
    }

    for (const auto& report : result.reports) {
        result.total_tokens += report.total_token_count;
        result.memorized_tokens += report.memorized_token_count;
    }
    return result;
}

std::vector<std::pair<std::size_t, std::uint64_t>> k_sensitivity(
    const std::vector<Generation>& generations, const SuffixIndex& index,
    const std::vector<std::size_t>& k_values, double entropy_min) {
    std::vector<std::pair<std::size_t, std::uint64_t>> table;
    for (std::size_t k : k_values) {
        if (k > index.k_max()) throw ConfigError("k sweep value exceeds index k_max");
        std::uint64_t count = 0;
        for (const auto& gen : generations) {
            if (gen.tokens.size() < k) continue;
            for (std::size_t i = 0; i + k <= gen.tokens.size(); ++i) {
                const TokenSpan window(gen.tokens.data() + i, k);
                if (window_entropy(window) < entropy_min) continue;
                if (index.contains(window)) ++count;
            }
        }
        table.emplace_back(k, count);
    }
    std::sort(table.begin(), table.end());
    return table;
}

namespace {
std::string bucket_label(std::uint64_t occ) {
    if (occ <= 1) return "1";
    std::uint64_t lo = 2, hi = 9;
    while (occ > hi) {
        lo = hi + 1;
        hi = lo * 10 - 1;
    }
    return std::to_string(lo) + "-" + std::to_string(hi);
}

std::uint64_t bucket_floor(std::uint64_t occ) {
    if (occ <= 1) return 1;
    std::uint64_t lo = 2, hi = 9;
    while (occ > hi) {
        lo = hi + 1;
        hi = lo * 10 - 1;
    }
    return lo;
}
}  // namespace

DuplicateHistogram duplicate_profile(const UniqueGramSet& grams, const SuffixIndex& index) {
    std::map<std::uint64_t, std::uint64_t> by_floor;
    for (const auto& [digest, info] : grams.grams()) {
        const TokenSpan gram = index.corpus_window(info.witness_offset, grams.gram_length);
        const std::uint64_t occ = index.count_occurrences(gram);
        if (occ == 0)
            throw DataError("unique gram with witness offset " +
                            std::to_string(info.witness_offset) + " is absent from the index");
        by_floor[bucket_floor(occ)] += 1;
    }
    DuplicateHistogram hist;
    for (const auto& [floor_key, count] : by_floor) {
        hist.buckets.emplace_back(bucket_label(floor_key), count);
        hist.total += count;
    }
    return hist;
}

std::vector<Generation> load_generations(const std::filesystem::path& path,
                                         Tokenizer& tokenizer) {
    std::vector<Generation> gens;
    const bool jsonl = path.extension() == ".jsonl" || path.extension() == ".json";
    std::size_t line_no = 0;
    for (const auto& line : io::read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        Generation gen;
        if (jsonl) {
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw DataError("malformed generation line " + std::to_string(line_no) + " in " +
                                path.string());
            if (j.contains("_meta")) continue;
            gen.id = j.contains("id") ? j["id"].get<std::string>()
                                      : "line-" + std::to_string(line_no);
            if (j.contains("tokens"))
                gen.tokens = j["tokens"].get<TokenSeq>();
            else if (j.contains("text"))
                gen.tokens = tokenizer.encode(j["text"].get<std::string>());
            else
                throw DataError("generation line " + std::to_string(line_no) +
                                " has neither tokens nor text");
        } else {
            gen.id = "line-" + std::to_string(line_no);
            gen.tokens = tokenizer.encode(line);
        }
        gens.push_back(std::move(gen));
    }
    return gens;
}

void save_matches(const ScanResult& result, const std::filesystem::path& path,
                  const std::string& meta_line) {
    std::string out = meta_line;
    for (const auto& report : result.reports) {
        json spans = json::array();
        for (const auto& s : report.matched_spans)
            spans.push_back(
                {{"start", s.start}, {"length", s.length}, {"occurrences", s.occurrences}});
        json grams = json::array();
        for (const auto& d : report.window_digests) grams.push_back(to_hex(d));
        json j{{"id", report.generation_id},
               {"total_tokens", report.total_token_count},
               {"memorized_tokens", report.memorized_token_count},
               {"spans", spans},
               {"grams", grams}};
        out += j.dump();
        out.push_back('\n');
    }
    io::write_file(path, out);
}

std::vector<MatchReport> load_matches(const std::filesystem::path& path) {
    std::vector<MatchReport> reports;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("_meta")) continue;
        MatchReport r;
        r.generation_id = j.at("id").get<std::string>();
        r.total_token_count = j.at("total_tokens").get<std::uint64_t>();
        r.memorized_token_count = j.at("memorized_tokens").get<std::uint64_t>();
        for (const auto& s : j.at("spans"))
            r.matched_spans.push_back({s.at("start").get<std::size_t>(),
                                       s.at("length").get<std::size_t>(),
                                       s.at("occurrences").get<std::uint64_t>()});
        if (j.contains("grams"))
            for (const auto& g : j.at("grams"))
                r.window_digests.push_back(digest_from_hex(g.get<std::string>()));
        reports.push_back(std::move(r));
    }
    return reports;
}

void save_grams(const UniqueGramSet& grams, const std::filesystem::path& path,
                const std::string& meta_line) {
    // sorted by digest so repeated runs emit byte-identical files
    std::vector<std::pair<Digest128, UniqueGramSet::Info>> rows(grams.grams().begin(),
                                                                grams.grams().end());
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string out = meta_line;
    for (const auto& [digest, info] : rows) {
        json j{{"digest", to_hex(digest)},
               {"observations", info.observations},
               {"witness", info.witness_offset},
               {"length", grams.gram_length}};
        out += j.dump();
        out.push_back('\n');
    }
    io::write_file(path, out);
}

UniqueGramSet load_grams(const std::filesystem::path& path) {
    UniqueGramSet grams;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("_meta")) continue;
        const Digest128 digest = digest_from_hex(j.at("digest").get<std::string>());
        const auto observations = j.at("observations").get<std::uint64_t>();
        const auto witness = j.at("witness").get<std::uint64_t>();
        for (std::uint64_t i = 0; i < observations; ++i) grams.insert(digest, witness);
        grams.gram_length = j.at("length").get<std::size_t>();
    }
    return grams;
}

}  // namespace memaudit
