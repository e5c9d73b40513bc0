#include "memaudit/mi_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

using nlohmann::json;

GramModelProvider::GramModelProvider(TokenSpan training, std::size_t order, double alpha)
    : order_(order), alpha_(alpha) {
    if (order_ < 1) throw ConfigError("gram model order must be >= 1");
    if (alpha_ <= 0.0) throw ConfigError("add-alpha smoothing needs alpha > 0");
    if (training.empty()) throw ConfigError("gram model needs non-empty training text");

    std::unordered_set<TokenId> distinct(training.begin(), training.end());
    vocab_ = static_cast<double>(distinct.size()) + 1.0;
    total_tokens_ = training.size();

    for (std::size_t len = 1; len <= order_; ++len) {
        for (std::size_t i = 0; i + len <= training.size(); ++i)
            window_counts_[window_key(TokenSpan(training.data() + i, len))] += 1;
    }
}

std::uint64_t GramModelProvider::window_key(TokenSpan window) const {
    const Digest128 d =
        digest_bytes(window.data(), window.size() * sizeof(TokenId));
    return d.lo ^ (d.hi * 0x9E3779B97F4A7C15ULL) ^ (window.size() << 56);
}

double GramModelProvider::token_log2_prob(TokenSpan context, TokenId token) const {
    // equal-weight interpolation over orders 1..order
    double p = 0.0;
    const double weight = 1.0 / static_cast<double>(order_);
    TokenSeq window;
    window.reserve(order_);
    for (std::size_t o = 1; o <= order_; ++o) {
        const std::size_t ctx_len = std::min(o - 1, context.size());
        window.assign(context.end() - static_cast<std::ptrdiff_t>(ctx_len), context.end());
        window.push_back(token);

        double ctx_count;
        if (ctx_len == 0) {
            ctx_count = static_cast<double>(total_tokens_);
        } else {
            auto it = window_counts_.find(
                window_key(TokenSpan(window.data(), ctx_len)));
            ctx_count = it == window_counts_.end() ? 0.0 : static_cast<double>(it->second);
        }
        auto it = window_counts_.find(window_key(window));
        const double joint = it == window_counts_.end() ? 0.0 : static_cast<double>(it->second);
        p += weight * (joint + alpha_) / (ctx_count + alpha_ * vocab_);
    }
    return std::log2(p);
}

double GramModelProvider::nll_bits(const Generation& gen) const {
    double nll = 0.0;
    for (std::size_t i = 0; i < gen.tokens.size(); ++i) {
        const std::size_t ctx_len = std::min(order_ - 1, i);
        const TokenSpan context(gen.tokens.data() + i - ctx_len, ctx_len);
        nll -= token_log2_prob(context, gen.tokens[i]);
    }
    return nll;
}

ExternalScoreProvider::ExternalScoreProvider(const std::filesystem::path& path) {
    for (const auto& line : io::read_lines(path)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("nll_bits"))
            throw DataError("malformed score line in " + path.string());
        by_id_[j["id"].get<std::string>()] = j["nll_bits"].get<double>();
    }
}

double ExternalScoreProvider::nll_bits(const Generation& gen) const {
    auto it = by_id_.find(gen.id);
    if (it == by_id_.end())
        throw DataError("no external nll score for generation " + gen.id);
    return it->second;
}

MIScore score(const Generation& gen, const PerplexityProvider& provider,
              const Tokenizer& tokenizer) {
    if (gen.tokens.empty()) throw ConfigError("cannot score an empty generation");
    MIScore s;
    s.generation_id = gen.id;
    s.nll_bits = provider.nll_bits(gen);
    if (!std::isfinite(s.nll_bits))
        throw DataError("provider returned a non-finite score for generation " + gen.id);

    const std::string text = tokenizer.decode(gen.tokens);
    uLongf bound = compressBound(static_cast<uLong>(text.size()));
    std::vector<unsigned char> buf(bound);
    const int rc = compress2(buf.data(), &bound,
                             reinterpret_cast<const unsigned char*>(text.data()),
                             static_cast<uLong>(text.size()), Z_BEST_COMPRESSION);
    if (rc != Z_OK) throw DataError("zlib compression failed for generation " + gen.id);
    s.zlib_bits = 8.0 * static_cast<double>(bound);
    s.ratio = s.nll_bits / s.zlib_bits;
    return s;
}

std::vector<MIScore> score_all(const std::vector<Generation>& generations,
                               const PerplexityProvider& provider, const Tokenizer& tokenizer,
                               std::size_t workers) {
    std::vector<MIScore> scores(generations.size());
    parallel_for(generations.size(), workers,
                 [&](std::size_t i) { scores[i] = score(generations[i], provider, tokenizer); });
    return scores;
}

std::vector<PrecisionRow> precision_sweep(const std::vector<MIScore>& scores,
                                          const std::vector<bool>& labels,
                                          const std::vector<double>& thresholds) {
    if (scores.size() != labels.size())
        throw ConfigError("precision_sweep needs one label per score");
    std::vector<PrecisionRow> rows;
    for (double t : thresholds) {
        PrecisionRow row;
        row.threshold = t;
        std::uint64_t tp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i].ratio <= t) {
                ++row.yield;
                if (labels[i]) ++tp;
            }
        }
        if (row.yield > 0) {
            row.defined = true;
            row.precision = static_cast<double>(tp) / static_cast<double>(row.yield);
        }
        rows.push_back(row);
    }
    return rows;
}

void save_scores(const std::vector<MIScore>& scores, const std::filesystem::path& path) {
    std::string out;
    for (const auto& s : scores) {
        json j{{"id", s.generation_id},
               {"nll_bits", s.nll_bits},
               {"zlib_bits", s.zlib_bits},
               {"ratio", s.ratio}};
        out += j.dump();
        out.push_back('\n');
    }
    io::write_file(path, out);
}

void save_precision(const std::vector<PrecisionRow>& rows, const std::filesystem::path& path) {
    std::string out = "threshold,precision,yield\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6g,", r.threshold);
        out += buf;
        if (r.defined) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.precision);
            out += buf;
        } else {
            out += "NA";
        }
        std::snprintf(buf, sizeof(buf), ",%llu\n", static_cast<unsigned long long>(r.yield));
        out += buf;
    }
    io::write_file(path, out);
}

}  // namespace memaudit
