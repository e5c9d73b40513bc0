#include "memaudit/synth_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/kernels.hpp"

namespace memaudit {

using nlohmann::json;

namespace {
constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::vector<std::uint64_t> span_grid(const CorpusStream& corpus, std::size_t span_length) {
    // Non-overlapping candidate starts: a fixed grid inside each document.
    std::vector<std::uint64_t> candidates;
    for (const auto& e : corpus.manifest)
        for (std::uint64_t off = 0; off + span_length <= e.length; off += span_length)
            candidates.push_back(e.offset + off);
    return candidates;
}
}  // namespace

std::size_t SynthModel::max_pool_size(const CorpusStream& corpus, std::size_t span_length) {
    return span_grid(corpus, span_length).size();
}

SynthModel SynthModel::build(const CorpusStream& corpus, const SynthModelConfig& cfg) {
    if (cfg.pool_size < 1) throw ConfigError("pool_size must be >= 1");
    if (cfg.span_length < 2) throw ConfigError("span_length must be >= 2");
    if (cfg.emit_prob < 0.0 || cfg.emit_prob > 1.0)
        throw ConfigError("emit_prob must lie in [0, 1]");
    if (cfg.divergence.repeat_threshold_spread <= 0.0)
        throw ConfigError("repeat_threshold_spread must be positive");

    SynthModel model;
    model.cfg_ = cfg;

    auto candidates = span_grid(corpus, cfg.span_length);
    if (candidates.size() < cfg.pool_size)
        throw DataError("corpus too small for pool_size=" + std::to_string(cfg.pool_size) +
                        ": only " + std::to_string(candidates.size()) + " non-overlapping spans of " +
                        std::to_string(cfg.span_length) + " tokens fit");

    Rng rng(cfg.seed);
    for (std::size_t i = candidates.size() - 1; i > 0; --i) {
        const std::size_t j = rng.uniform(i + 1);
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(cfg.pool_size);
    std::sort(candidates.begin(), candidates.end());
    for (std::uint64_t off : candidates) {
        model.pool_.push_back({off, static_cast<std::uint32_t>(cfg.span_length)});
        model.pool_tokens_.emplace_back(corpus.tokens.begin() + static_cast<std::ptrdiff_t>(off),
                                        corpus.tokens.begin() +
                                            static_cast<std::ptrdiff_t>(off + cfg.span_length));
    }

    // Filler ids verified absent from the corpus, lowest first. For a
    // byte-level corpus over a restricted alphabet this keeps the filler
    // within the decodable byte range.
    std::unordered_set<TokenId> used(corpus.tokens.begin(), corpus.tokens.end());
    for (TokenId id = 0; model.filler_.size() < cfg.filler_vocab; ++id) {
        if (id >= corpus.sentinel)
            throw DataError("no corpus-absent token ids available for synthetic filler");
        if (!used.contains(id)) model.filler_.push_back(id);
    }

    model.span_picker_ = ZipfSampler(cfg.pool_size, cfg.zipf_alpha);
    for (std::size_t i = 0; i < model.pool_tokens_.size(); ++i)
        model.first_token_mass_[model.pool_tokens_[i].front()] += model.span_picker_.weight(i);
    return model;
}

TokenSpan SynthModel::span_tokens(const PoolSpan& span) const {
    for (std::size_t i = 0; i < pool_.size(); ++i)
        if (pool_[i].offset == span.offset) return pool_tokens_[i];
    throw DataError("span not in pool");
}

double SynthModel::boost_for(TokenId word) const {
    auto it = cfg_.divergence.word_boosts.find(word);
    return it == cfg_.divergence.word_boosts.end() ? cfg_.divergence.boost : it->second;
}

double SynthModel::diverged_emit_prob(TokenId word) const {
    return std::clamp(cfg_.emit_prob * boost_for(word), 0.0, 1.0);
}

double SynthModel::threshold_for(TokenId word) const {
    // small deterministic per-word offset so curves over word choices spread
    const Digest128 h = digest_bytes(&word, sizeof(word));
    const std::uint64_t mix = h.lo ^ cfg_.seed;
    const double u = (static_cast<double>(mix >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    return cfg_.divergence.repeat_threshold_mean +
           0.25 * cfg_.divergence.repeat_threshold_spread * u;
}

double SynthModel::repeat_continue_prob(TokenId word, std::uint64_t repeats) const {
    // Logistic hazard centered on the word's threshold. The scale keeps the
    // curve above 0.99 at mean-spread and below 0.001 at mean+spread even
    // with the per-word offset.
    const double scale = cfg_.divergence.repeat_threshold_spread / 10.0;
    const double x = (static_cast<double>(repeats) - threshold_for(word)) / scale;
    return 1.0 / (1.0 + std::exp(x));
}

bool SynthModel::is_filler(TokenId t) const {
    return std::binary_search(filler_.begin(), filler_.end(), t);
}

std::size_t SynthModel::matching_span_prefix(TokenSpan prompt) const {
    if (prompt.empty()) return npos;
    for (std::size_t i = 0; i < pool_tokens_.size(); ++i) {
        const auto& span = pool_tokens_[i];
        if (prompt.size() >= span.size()) continue;
        if (kernels::find_mismatch(span.data(), prompt.data(), prompt.size()) == prompt.size())
            return i;
    }
    return npos;
}

TokenSeq SynthModel::generate(TokenSpan prompt, std::size_t length, std::uint64_t gen_seed) const {
    if (length < 1) throw ConfigError("generation length must be >= 1");
    Rng rng(cfg_.seed ^ (gen_seed * 0x9E3779B97F4A7C15ULL + 0x165667B19E3779F9ULL));
    TokenSeq out;
    out.reserve(length);

    double emit_prob = cfg_.emit_prob;

    if (cfg_.complete_prefixes) {
        const std::size_t s = matching_span_prefix(prompt);
        if (s != npos) {
            const auto& span = pool_tokens_[s];
            for (std::size_t i = prompt.size(); i < span.size() && out.size() < length; ++i)
                out.push_back(span[i]);
        }
    }

    const bool repeat_prompt =
        !prompt.empty() && kernels::count_leading(prompt.data(), prompt.size(), prompt.front()) ==
                               prompt.size();
    if (out.empty() && repeat_prompt) {
        const TokenId word = prompt.front();
        std::uint64_t run = prompt.size();
        while (out.size() < length) {
            if (rng.uniform_real() < repeat_continue_prob(word, run)) {
                out.push_back(word);
                ++run;
            } else {
                emit_prob = diverged_emit_prob(word);
                break;
            }
        }
    }

    while (out.size() < length) {
        if (rng.uniform_real() < emit_prob) {
            const auto& span = pool_tokens_[span_picker_.draw(rng)];
            for (TokenId t : span) {
                if (out.size() >= length) break;
                out.push_back(t);
            }
        } else {
            out.push_back(filler_[rng.uniform(filler_.size())]);
        }
    }
    return out;
}

double SynthModel::next_token_prob(TokenSpan context, TokenId token) const {
    const double filler_mass = 1.0 / static_cast<double>(filler_.size());
    auto base_prob = [&](double p, TokenId t) {
        double prob = 0.0;
        auto it = first_token_mass_.find(t);
        if (it != first_token_mass_.end()) prob += p * it->second;
        if (is_filler(t)) prob += (1.0 - p) * filler_mass;
        return prob;
    };

    if (cfg_.complete_prefixes && !context.empty()) {
        const std::size_t s = matching_span_prefix(context);
        if (s != npos) return pool_tokens_[s][context.size()] == token ? 1.0 : 0.0;
    }

    const bool repeat_context =
        !context.empty() &&
        kernels::count_leading(context.data(), context.size(), context.front()) == context.size();
    if (repeat_context) {
        const TokenId word = context.front();
        const double p_rep = repeat_continue_prob(word, context.size());
        const double p_emit = diverged_emit_prob(word);
        double prob = (1.0 - p_rep) * base_prob(p_emit, token);
        if (token == word) prob += p_rep;
        return prob;
    }
    return base_prob(cfg_.emit_prob, token);
}

void SynthModel::save_ground_truth(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json spans = json::array();
    for (const auto& s : pool_) spans.push_back({{"offset", s.offset}, {"length", s.length}});
    json truth{{"spans", spans},
               {"filler_alphabet", {{"first", filler_.front()}, {"count", filler_.size()}}}};
    io::write_file(dir / "synth.groundtruth.json", truth.dump(2) + "\n");

    json boosts = json::object();
    for (const auto& [w, b] : cfg_.divergence.word_boosts) boosts[std::to_string(w)] = b;
    json config{{"pool_size", cfg_.pool_size},
                {"span_length", cfg_.span_length},
                {"zipf_alpha", cfg_.zipf_alpha},
                {"emit_prob", cfg_.emit_prob},
                {"seed", cfg_.seed},
                {"complete_prefixes", cfg_.complete_prefixes},
                {"filler_vocab", cfg_.filler_vocab},
                {"divergence",
                 {{"repeat_threshold_mean", cfg_.divergence.repeat_threshold_mean},
                  {"repeat_threshold_spread", cfg_.divergence.repeat_threshold_spread},
                  {"boost", cfg_.divergence.boost},
                  {"word_boosts", boosts}}}};
    io::write_file(dir / "synth.config.json", config.dump(2) + "\n");
}

}  // namespace memaudit
