// memaudit: measure extractable memorization in text generators.
//
// Pipeline subcommands: ingest -> build-index -> (simulate) -> scan ->
// estimate / mi-score / pii-scan / probe -> report. Every subcommand reads
// one key=value config file plus --set overrides; flags win. Data outputs go
// only to declared paths; logs are JSON lines on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "memaudit/attack_probe.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/estimators.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/match_scan.hpp"
#include "memaudit/mi_scorer.hpp"
#include "memaudit/pii_scan.hpp"
#include "memaudit/report.hpp"
#include "memaudit/suffix_index.hpp"
#include "memaudit/synth_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memaudit;

namespace {

void jlog(const std::string& level, const std::string& event, json extra = json::object()) {
    extra["level"] = level;
    extra["event"] = event;
    std::cerr << extra.dump() << "\n";
}

struct Ctx {
    KeyValueConfig cfg;
    std::uint64_t seed = 0;
    std::size_t workers = 0;

    std::uint64_t cfg_seed() const { return cfg.get_u64("seed", seed); }
    std::size_t cfg_workers() const {
        const auto w = cfg.get_u64("workers", workers);
        if (w > 0) return static_cast<std::size_t>(w);
        const auto hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : hc;
    }

    fs::path required_path(const std::string& key) const {
        const std::string v = cfg.get(key, "");
        if (v.empty()) throw ConfigError("config key " + key + " is required");
        return v;
    }

    fs::path required_existing(const std::string& key) const {
        const fs::path p = required_path(key);
        std::error_code ec;
        if (!fs::exists(p, ec))
            throw ConfigError("path for " + key + " does not exist: " + p.string());
        return p;
    }
};

IngestConfig ingest_config(const KeyValueConfig& cfg) {
    IngestConfig ic;
    ic.scheme = scheme_from_string(cfg.get("tokenizer.scheme", "byte-level"));
    const auto width = cfg.get_int("tokenizer.width", 16);
    if (width != 16 && width != 32) throw ConfigError("tokenizer.width must be 16 or 32");
    ic.width = width == 16 ? TokenWidth::w16 : TokenWidth::w32;
    ic.normalize = cfg.get_bool("tokenizer.normalize", true);
    ic.external_vocab_path = cfg.get("tokenizer.vocab", "");
    return ic;
}

MatchConfig match_config(const KeyValueConfig& cfg) {
    MatchConfig mc;
    mc.k = static_cast<std::size_t>(cfg.get_u64("match.k", 50));
    mc.entropy_min = cfg.get_double("match.entropy_min", 2.0);
    mc.stride = static_cast<std::size_t>(cfg.get_u64("match.stride", 1));
    return mc;
}

SynthModelConfig synth_config(const Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    SynthModelConfig sc;
    sc.pool_size = static_cast<std::size_t>(cfg.get_u64("synth.pool_size", 100));
    sc.span_length = static_cast<std::size_t>(cfg.get_u64("synth.span_length", 50));
    sc.zipf_alpha = cfg.get_double("synth.zipf_alpha", 1.0);
    sc.emit_prob = cfg.get_double("synth.emit_prob", 0.1);
    sc.seed = cfg.get_u64("synth.seed", ctx.cfg_seed());
    sc.complete_prefixes = cfg.get_bool("synth.complete_prefixes", false);
    sc.filler_vocab = static_cast<std::size_t>(cfg.get_u64("synth.filler_vocab", 4096));
    sc.divergence.repeat_threshold_mean = cfg.get_double("synth.threshold_mean", 250.0);
    sc.divergence.repeat_threshold_spread = cfg.get_double("synth.threshold_spread", 50.0);
    sc.divergence.boost = cfg.get_double("synth.boost", 1.0);
    for (const auto& item : cfg.get_list("synth.word_boosts")) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("synth.word_boosts items must be token:boost, got " + item);
        sc.divergence.word_boosts[static_cast<TokenId>(std::stoul(item.substr(0, colon)))] =
            std::stod(item.substr(colon + 1));
    }
    return sc;
}

Digest128 tokens_digest(const CorpusStream& stream) {
    return digest_bytes(stream.tokens.data(), stream.tokens.size() * sizeof(TokenId));
}

RunMeta make_meta(const Ctx& ctx, const std::string& corpus_digest) {
    RunMeta meta;
    meta.config_digest = to_hex(ctx.cfg.digest());
    meta.corpus_digest = corpus_digest;
    meta.seed = ctx.cfg_seed();
    return meta;
}

void check_index_fresh(const SuffixIndex& index, const CorpusStream& corpus) {
    if (index.corpus_digest() != tokens_digest(corpus))
        throw DataError("index was built from a different corpus (digest mismatch); rebuild it");
}

void write_json_with_meta(json j, const RunMeta& meta, const fs::path& path) {
    j["meta"] = meta.to_json();
    io::write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const Ctx& ctx) {
    const fs::path source = ctx.required_existing("paths.source");
    const fs::path out = ctx.required_path("paths.corpus");
    const IngestConfig ic = ingest_config(ctx.cfg);
    auto result = ingest(source, ic);
    save_corpus(result, ic, out);
    jlog("info", "ingest",
         {{"documents", result.stream.manifest.size()},
          {"dropped_duplicates", result.dedup_log.size()},
          {"tokens", result.stream.tokens.size()},
          {"out", out.string()}});
    return 0;
}

int cmd_build_index(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path out = ctx.required_path("paths.index");
    auto corpus = load_corpus(corpus_dir);
    const auto shards = static_cast<std::size_t>(ctx.cfg.get_u64("index.shards", 8));
    const auto k_max = static_cast<std::size_t>(ctx.cfg.get_u64("index.k_max", 64));
    const auto offset_width = static_cast<int>(ctx.cfg.get_int("index.offset_width", 32));
    auto index =
        SuffixIndex::build(corpus.stream, shards, k_max, ctx.cfg_workers(), offset_width);
    index.verify();
    index.save(out);
    jlog("info", "build-index",
         {{"shards", index.shard_count()},
          {"k_max", index.k_max()},
          {"tokens", index.corpus_len()},
          {"out", out.string()}});
    return 0;
}

int cmd_scan(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path index_dir = ctx.required_existing("paths.index");
    const fs::path gen_path = ctx.required_existing("paths.generations");
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    auto corpus = load_corpus(corpus_dir);
    auto index = SuffixIndex::load(index_dir);
    check_index_fresh(index, corpus.stream);
    const RunMeta meta = make_meta(ctx, to_hex(corpus.token_file_digest));

    auto generations = load_generations(gen_path, corpus.tokenizer);
    const MatchConfig mc = match_config(ctx.cfg);
    auto result = scan(generations, index, mc, ctx.cfg_workers());

    save_matches(result, out / "matches.jsonl", meta.jsonl_line());
    save_grams(result.grams, out / "grams.jsonl", meta.jsonl_line());

    json summary{{"percent_memorized", result.percent_memorized()},
                 {"memorized_tokens", result.memorized_tokens},
                 {"total_tokens", result.total_tokens},
                 {"unique_kgrams", result.grams.unique_count()},
                 {"window_hits", result.window_hits},
                 {"entropy_filtered_windows", result.entropy_filtered_windows},
                 {"generations", generations.size()},
                 {"k", mc.k},
                 {"entropy_min", mc.entropy_min}};
    write_json_with_meta(summary, meta, out / "summary.json");

    FrequencyTable table = FrequencyTable::from_gram_set(result.grams);
    json freq = json::object();
    for (const auto& [r, nr] : table.counts) freq[std::to_string(r)] = nr;
    freq["_meta"] = meta.to_json();
    io::write_file(out / "freqtable.json", freq.dump(2) + "\n");

    // discovery curve: unique grams versus observations, per generation
    {
        std::string csv = meta.csv_comment();
        csv += "generated_tokens,memorized_observations,unique_grams\n";
        std::unordered_map<Digest128, bool, Digest128Hash> seen;
        std::uint64_t tokens = 0, observations = 0, unique = 0;
        char buf[96];
        for (const auto& report : result.reports) {
            tokens += report.total_token_count;
            for (const auto& d : report.window_digests) {
                ++observations;
                auto [it, inserted] = seen.try_emplace(d, true);
                if (inserted) ++unique;
            }
            std::snprintf(buf, sizeof(buf), "%llu,%llu,%llu\n",
                          static_cast<unsigned long long>(tokens),
                          static_cast<unsigned long long>(observations),
                          static_cast<unsigned long long>(unique));
            csv += buf;
        }
        io::write_file(out / "discovery.csv", csv);
    }

    if (ctx.cfg.has("match.k_values")) {
        std::vector<std::size_t> ks;
        for (double v : ctx.cfg.get_double_list("match.k_values"))
            ks.push_back(static_cast<std::size_t>(v));
        auto sweep = k_sensitivity(generations, index, ks, mc.entropy_min);
        std::string csv = meta.csv_comment();
        csv += "k,memorized_windows\n";
        for (const auto& [k, count] : sweep)
            csv += std::to_string(k) + "," + std::to_string(count) + "\n";
        io::write_file(out / "ksweep.csv", csv);
    }

    if (ctx.cfg.get_bool("match.duplicate_profile", true) && result.grams.unique_count() > 0) {
        auto hist = duplicate_profile(result.grams, index);
        json buckets = json::array();
        for (const auto& [label, count] : hist.buckets)
            buckets.push_back({{"bucket", label}, {"count", count}});
        write_json_with_meta(json{{"buckets", buckets}, {"total", hist.total}}, meta,
                             out / "duplicates.json");
    }

    jlog("info", "scan",
         {{"generations", generations.size()},
          {"percent_memorized", result.percent_memorized()},
          {"unique_kgrams", result.grams.unique_count()},
          {"out", out.string()}});
    return 0;
}

int cmd_estimate(const Ctx& ctx) {
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    FrequencyTable table;
    std::vector<MatchReport> reports;
    bool have_reports = false;
    if (ctx.cfg.has("paths.freqtable")) {
        table = FrequencyTable::load(ctx.required_existing("paths.freqtable"));
    } else {
        const fs::path matches = ctx.cfg.has("paths.matches")
                                     ? ctx.required_existing("paths.matches")
                                     : out / "matches.jsonl";
        if (!fs::exists(matches))
            throw ConfigError("estimate needs paths.freqtable or paths.matches; missing " +
                              matches.string());
        reports = load_matches(matches);
        have_reports = true;
        table = FrequencyTable::from_matches(reports);
    }
    if (table.total_observations() == 0)
        throw DataError("no memorized-gram observations to estimate from");

    std::string corpus_digest;
    if (ctx.cfg.has("paths.corpus")) {
        auto meta_json =
            json::parse(io::read_file(fs::path(ctx.cfg.get("paths.corpus", "")) /
                                      "corpus.meta.json"));
        corpus_digest = meta_json.value("tokens_digest", "");
    }
    const RunMeta meta = make_meta(ctx, corpus_digest);

    const auto methods = ctx.cfg.has("estimate.methods")
                             ? ctx.cfg.get_list("estimate.methods")
                             : std::vector<std::string>{"gt", "chao1", "mark-recapture"};

    for (const auto& method : methods) {
        if (method == "gt" || method == "sequential-good-turing") {
            SequentialGtOptions opts;
            opts.horizon = ctx.cfg.get_u64("estimate.horizon", table.total_observations() * 10);
            opts.replicates =
                static_cast<std::size_t>(ctx.cfg.get_u64("estimate.replicates", 32));
            opts.resmooth_every = ctx.cfg.get_u64("estimate.resmooth_every", 1000);
            opts.seed = ctx.cfg_seed();
            opts.workers = ctx.cfg_workers();
            auto result = sequential_gt(table, opts);
            json j{{"method", result.method},
                   {"point_estimate", result.point_estimate},
                   {"band", {result.band_low, result.band_high}},
                   {"observed_distinct", table.distinct_count()},
                   {"horizon", result.horizon},
                   {"replicates", result.replicates},
                   {"seed", result.seed}};
            write_json_with_meta(j, meta, out / "estimate.sequential-good-turing.json");
            std::string csv = meta.csv_comment();
            csv += "observations,distinct\n";
            char buf[64];
            for (const auto& [obs, distinct] : result.trajectory.points) {
                std::snprintf(buf, sizeof(buf), "%llu,%.3f\n",
                              static_cast<unsigned long long>(obs), distinct);
                csv += buf;
            }
            io::write_file(out / "curve.csv", csv);
            jlog("info", "estimate", {{"method", "gt"}, {"estimate", result.point_estimate}});
        } else if (method == "chao1") {
            auto result = chao1(table);
            json j{{"method", result.method},
                   {"point_estimate", result.point_estimate},
                   {"observed_distinct", table.distinct_count()}};
            write_json_with_meta(j, meta, out / "estimate.chao1.json");
            jlog("info", "estimate", {{"method", "chao1"}, {"estimate", result.point_estimate}});
        } else if (method == "mark-recapture") {
            if (!have_reports) {
                jlog("warn", "estimate",
                     {{"method", "mark-recapture"},
                      {"skipped", "needs the matches.jsonl observation stream"}});
                continue;
            }
            const std::uint64_t distinct = table.distinct_count();
            const auto n_marked = ctx.cfg.get_u64("estimate.mark_n", std::min<std::uint64_t>(
                                                                         500, distinct / 2));
            const auto k_samples = ctx.cfg.get_u64("estimate.mark_k", n_marked);
            auto counts = derive_capture_counts(reports, n_marked, k_samples);
            if (!counts) {
                jlog("warn", "estimate",
                     {{"method", "mark-recapture"},
                      {"skipped", "observation stream too short for both phases"}});
                continue;
            }
            auto result = mark_recapture(*counts);
            json j{{"method", "mark-recapture"},
                   {"defined", result.defined},
                   {"point_estimate", result.estimate},
                   {"marked", counts->marked},
                   {"recaptured", counts->recaptured},
                   {"overlap", counts->overlap},
                   {"observed_distinct", distinct}};
            write_json_with_meta(j, meta, out / "estimate.mark-recapture.json");
            jlog("info", "estimate",
                 {{"method", "mark-recapture"}, {"estimate", result.estimate}});
        } else {
            throw ConfigError("unknown estimator: " + method +
                              " (chiu/zelterman are optional plugins, not bundled)");
        }
    }

    if (ctx.cfg.has("estimate.fractions")) {
        const fs::path grams_path = ctx.cfg.has("paths.grams")
                                        ? ctx.required_existing("paths.grams")
                                        : out / "grams.jsonl";
        const fs::path corpus_dir = ctx.required_existing("paths.corpus");
        const fs::path index_dir = ctx.required_existing("paths.index");
        auto grams = load_grams(grams_path);
        auto corpus = load_corpus(corpus_dir);
        auto index = SuffixIndex::load(index_dir);
        check_index_fresh(index, corpus.stream);
        auto curve = subsample_curve(grams, index, corpus.stream.manifest,
                                     ctx.cfg.get_double_list("estimate.fractions"),
                                     ctx.cfg_seed());
        json points = json::array();
        for (const auto& p : curve.points)
            points.push_back({{"fraction", p.fraction}, {"found", p.found}});
        json j{{"points", points},
               {"fit_valid", curve.fit_valid},
               {"fit_scale", curve.fit_scale},
               {"fit_exponent", curve.fit_exponent},
               {"predicted_at_2x", curve.predicted_at_2x}};
        write_json_with_meta(j, meta, out / "subsample.json");
        std::string csv = meta.csv_comment();
        csv += "fraction,found\n";
        char buf[64];
        for (const auto& p : curve.points) {
            std::snprintf(buf, sizeof(buf), "%.4f,%llu\n", p.fraction,
                          static_cast<unsigned long long>(p.found));
            csv += buf;
        }
        io::write_file(out / "subsample.csv", csv);
    }
    return 0;
}

int cmd_mi_score(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path gen_path = ctx.required_existing("paths.generations");
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    auto corpus = load_corpus(corpus_dir);
    const RunMeta meta = make_meta(ctx, to_hex(corpus.token_file_digest));
    auto generations = load_generations(gen_path, corpus.tokenizer);

    std::unique_ptr<PerplexityProvider> provider;
    if (ctx.cfg.has("paths.scores")) {
        provider =
            std::make_unique<ExternalScoreProvider>(ctx.required_existing("paths.scores"));
    } else {
        provider = std::make_unique<GramModelProvider>(
            TokenSpan(corpus.stream.tokens),
            static_cast<std::size_t>(ctx.cfg.get_u64("mi.order", 5)),
            ctx.cfg.get_double("mi.alpha", 0.1));
    }

    auto scores = score_all(generations, *provider, corpus.tokenizer, ctx.cfg_workers());
    {
        std::string jsonl = meta.jsonl_line();
        for (const auto& s : scores) {
            json j{{"id", s.generation_id},
                   {"nll_bits", s.nll_bits},
                   {"zlib_bits", s.zlib_bits},
                   {"ratio", s.ratio}};
            jsonl += j.dump();
            jsonl.push_back('\n');
        }
        io::write_file(out / "miscores.jsonl", jsonl);
    }

    // labels from a prior scan let us sweep precision
    const fs::path matches = ctx.cfg.has("paths.matches")
                                 ? fs::path(ctx.cfg.get("paths.matches", ""))
                                 : out / "matches.jsonl";
    if (fs::exists(matches)) {
        auto reports = load_matches(matches);
        std::unordered_map<std::string, bool> memorized;
        for (const auto& r : reports) memorized[r.generation_id] = r.memorized_token_count > 0;
        std::vector<bool> labels;
        labels.reserve(scores.size());
        for (const auto& s : scores) {
            auto it = memorized.find(s.generation_id);
            labels.push_back(it != memorized.end() && it->second);
        }
        std::vector<double> thresholds = ctx.cfg.get_double_list("mi.thresholds");
        if (thresholds.empty()) {
            // deciles of the observed ratios
            std::vector<double> sorted;
            for (const auto& s : scores) sorted.push_back(s.ratio);
            std::sort(sorted.begin(), sorted.end());
            for (int d = 1; d <= 10; ++d)
                thresholds.push_back(sorted[std::min(sorted.size() - 1,
                                                     sorted.size() * d / 10)]);
        }
        auto rows = precision_sweep(scores, labels, thresholds);
        std::string csv = meta.csv_comment();
        csv += "threshold,precision,yield\n";
        char buf[96];
        for (const auto& r : rows) {
            if (r.defined)
                std::snprintf(buf, sizeof(buf), "%.6g,%.6f,%llu\n", r.threshold, r.precision,
                              static_cast<unsigned long long>(r.yield));
            else
                std::snprintf(buf, sizeof(buf), "%.6g,NA,%llu\n", r.threshold,
                              static_cast<unsigned long long>(r.yield));
            csv += buf;
        }
        io::write_file(out / "precision.csv", csv);
    } else {
        jlog("warn", "mi-score", {{"skipped", "no matches.jsonl; precision sweep needs labels"}});
    }
    jlog("info", "mi-score", {{"scored", scores.size()}, {"provider", provider->kind()}});
    return 0;
}

int cmd_pii_scan(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path index_dir = ctx.required_existing("paths.index");
    const fs::path gen_path = ctx.required_existing("paths.generations");
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    auto corpus = load_corpus(corpus_dir);
    auto index = SuffixIndex::load(index_dir);
    check_index_fresh(index, corpus.stream);
    const RunMeta meta = make_meta(ctx, to_hex(corpus.token_file_digest));
    auto generations = load_generations(gen_path, corpus.tokenizer);

    auto result = scan_pii(generations, corpus.tokenizer, index, match_config(ctx.cfg));
    {
        std::string jsonl = meta.jsonl_line();
        for (const auto& f : result.findings) {
            json j{{"id", f.generation_id}, {"kind", pii_kind_name(f.kind)},
                   {"begin", f.begin},     {"end", f.end},
                   {"surface", f.surface}, {"verified", f.verified}};
            jsonl += j.dump();
            jsonl.push_back('\n');
        }
        io::write_file(out / "pii.jsonl", jsonl);
    }
    json summary{{"generations", result.summary.generations},
                 {"generations_with_verified_pii", result.summary.generations_with_verified},
                 {"generation_rate", result.summary.generation_rate()},
                 {"candidates", result.summary.candidates},
                 {"verified", result.summary.verified},
                 {"candidate_precision", result.summary.candidate_precision()}};
    write_json_with_meta(summary, meta, out / "pii_summary.json");
    jlog("info", "pii-scan",
         {{"candidates", result.summary.candidates}, {"verified", result.summary.verified}});
    return 0;
}

int cmd_simulate(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    auto corpus = load_corpus(corpus_dir);
    const RunMeta meta = make_meta(ctx, to_hex(corpus.token_file_digest));
    auto model = SynthModel::build(corpus.stream, synth_config(ctx));
    model.save_ground_truth(out);

    const auto count = ctx.cfg.get_u64("synth.generations", 100);
    const auto length = static_cast<std::size_t>(ctx.cfg.get_u64("synth.length", 10000));
    std::string jsonl = meta.jsonl_line();
    for (std::uint64_t g = 0; g < count; ++g) {
        auto tokens = model.generate(TokenSeq{}, length, g);
        json j{{"id", "synth-" + std::to_string(g)}, {"tokens", tokens}};
        jsonl += j.dump();
        jsonl.push_back('\n');
    }
    io::write_file(out / "generations.jsonl", jsonl);
    jlog("info", "simulate",
         {{"generations", count}, {"tokens_each", length}, {"pool", model.pool().size()}});
    return 0;
}

int cmd_probe(const Ctx& ctx) {
    const fs::path corpus_dir = ctx.required_existing("paths.corpus");
    const fs::path index_dir = ctx.required_existing("paths.index");
    const fs::path out = ctx.required_path("paths.out");
    fs::create_directories(out);

    auto corpus = load_corpus(corpus_dir);
    auto index = SuffixIndex::load(index_dir);
    check_index_fresh(index, corpus.stream);
    const RunMeta meta = make_meta(ctx, to_hex(corpus.token_file_digest));
    const MatchConfig mc = match_config(ctx.cfg);

    const std::string source_kind = ctx.cfg.get("probe.source", "synthetic");
    std::unique_ptr<GenerationSource> source;
    std::unique_ptr<SynthModel> model;
    if (source_kind == "synthetic") {
        model = std::make_unique<SynthModel>(SynthModel::build(corpus.stream, synth_config(ctx)));
        source = std::make_unique<SyntheticSource>(*model);
    } else if (source_kind == "transcript") {
        source = std::make_unique<TranscriptReplaySource>(
            ctx.required_existing("paths.transcript"));
    } else if (source_kind == "command") {
        const std::string command = ctx.cfg.get("probe.command", "");
        if (command.empty()) throw ConfigError("probe.source=command needs probe.command");
        source = std::make_unique<ExternalCommandSource>(command);
    } else {
        throw ConfigError("unknown probe.source: " + source_kind);
    }

    const auto words = ctx.cfg.get_list("probe.words");
    if (!words.empty()) {
        RankWordsOptions opts;
        opts.budget_tokens = static_cast<std::size_t>(ctx.cfg.get_u64("probe.budget", 100000));
        opts.generation_len = static_cast<std::size_t>(ctx.cfg.get_u64("probe.gen_len", 2000));
        opts.prompt_repeats = static_cast<std::size_t>(ctx.cfg.get_u64("probe.repeats", 50));
        opts.seed = ctx.cfg_seed();
        auto rows = rank_words(words, *source, index, mc, corpus.tokenizer, opts);
        {
            std::string csv = meta.csv_comment();
            csv += "word,token,diverge_rate,memorized_token_rate,unique_grams\n";
            char buf[160];
            for (const auto& r : rows) {
                std::snprintf(buf, sizeof(buf), "%s,%u,%.6f,%.6f,%llu\n", r.word.c_str(),
                              r.token, r.diverge_rate, r.memorized_token_rate,
                              static_cast<unsigned long long>(r.unique_grams));
                csv += buf;
            }
            io::write_file(out / "wordrank.csv", csv);
        }

        // per-word divergence records from one probe generation each
        std::string jsonl = meta.jsonl_line();
        for (const auto& r : rows) {
            TokenSeq prompt(opts.prompt_repeats, r.token);
            auto output = source->generate(prompt, opts.generation_len, ctx.cfg_seed());
            auto rec = detect_divergence(r.token, output);
            json j{{"word", r.word},
                   {"repeat_run_length", rec.repeat_run_length},
                   {"diverged", rec.diverged},
                   {"tail_length", rec.tail.size()}};
            jsonl += j.dump();
            jsonl.push_back('\n');
        }
        io::write_file(out / "divergence.jsonl", jsonl);

        if (source->has_token_probs()) {
            std::vector<TokenId> word_tokens;
            for (const auto& w : words) {
                auto toks = corpus.tokenizer.encode(w);
                if (toks.size() == 1) word_tokens.push_back(toks[0]);
            }
            if (!word_tokens.empty()) {
                auto curve = repeat_probability_curve(
                    word_tokens, *source, ctx.cfg.get_u64("probe.max_repeats", 400),
                    ctx.cfg.get_u64("probe.curve_step", 5));
                save_repeat_curve(curve, out / "repeatcurve.csv");
            }
        }
    }

    if (ctx.cfg.get_bool("probe.discoverable", false)) {
        if (model == nullptr)
            throw ConfigError("probe.discoverable needs the synthetic source (known spans)");
        // extractable flag: did a prior scan observe the span's leading k-gram
        UniqueGramSet observed;
        const fs::path grams_path = ctx.cfg.get("paths.grams", "");
        if (!grams_path.empty() && fs::exists(grams_path)) observed = load_grams(grams_path);
        std::vector<DiscoverableSpan> spans;
        for (const auto& p : model->pool()) {
            DiscoverableSpan s;
            auto tokens = model->span_tokens(p);
            s.tokens.assign(tokens.begin(), tokens.end());
            if (tokens.size() >= mc.k) {
                const Digest128 d = digest_tokens(TokenSpan(tokens.data(), mc.k));
                s.extractable = observed.grams().contains(d);
            }
            spans.push_back(std::move(s));
        }
        DiscoverableOptions opts;
        opts.suffix_len = static_cast<std::size_t>(ctx.cfg.get_u64("probe.suffix_len", 50));
        opts.min_prefix_len =
            static_cast<std::size_t>(ctx.cfg.get_u64("probe.min_prefix_len", 1));
        opts.edit_tolerance = ctx.cfg.get_double("probe.edit_tolerance", 0.1);
        opts.seed = ctx.cfg_seed();
        auto summary = discoverable_test(spans, *source, opts);
        json j{{"tested", summary.tested},
               {"skipped", summary.skipped},
               {"exact_rate", summary.exact_rate},
               {"near_rate", summary.near_rate},
               {"matrix",
                {{"both", summary.both},
                 {"discoverable_only", summary.discoverable_only},
                 {"extractable_only", summary.extractable_only},
                 {"neither", summary.neither}}}};
        write_json_with_meta(j, meta, out / "discoverable.json");
    }

    jlog("info", "probe", {{"source", source_kind}, {"out", out.string()}});
    return 0;
}

int cmd_report(const Ctx& ctx) {
    const fs::path run_dir = ctx.required_existing("paths.out");
    std::string corpus_digest;
    if (ctx.cfg.has("paths.corpus")) {
        const fs::path meta_path = fs::path(ctx.cfg.get("paths.corpus", "")) / "corpus.meta.json";
        if (fs::exists(meta_path))
            corpus_digest = json::parse(io::read_file(meta_path)).value("tokens_digest", "");
    }
    const RunMeta meta = make_meta(ctx, corpus_digest);
    json report = build_audit_report(run_dir, meta);
    io::write_file(run_dir / "audit_report.json", report.dump(2) + "\n");
    write_headline_csv(report, run_dir / "headline.csv", meta);
    jlog("info", "report",
         {{"out", (run_dir / "audit_report.json").string()},
          {"sections_absent", report["sections_absent"]}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memaudit: verbatim-memorization measurement over indexed corpora"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--set", overrides, "override a config key (key=value), repeatable");
    app.add_option("--seed", seed, "global seed (config key: seed)");
    app.add_option("--workers", workers, "worker pool size (default: hardware parallelism)");

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Ctx&);
    };
    const Sub subs[] = {
        {"ingest", "tokenize + dedup documents into a corpus stream", cmd_ingest},
        {"build-index", "build the sharded suffix array", cmd_build_index},
        {"scan", "flag verbatim k-token matches in generations", cmd_scan},
        {"estimate", "extrapolate total memorization", cmd_estimate},
        {"mi-score", "likelihood-ratio membership-inference scores", cmd_mi_score},
        {"pii-scan", "regex PII findings verified against the index", cmd_pii_scan},
        {"simulate", "generate from the synthetic ground-truth model", cmd_simulate},
        {"probe", "divergence prompts, word ranking, discoverable test", cmd_probe},
        {"report", "merge stage outputs into audit_report.json", cmd_report},
    };

    // path flags shared by subcommands; mapped onto config keys
    struct PathFlag {
        const char* flag;
        const char* key;
    };
    const PathFlag path_flags[] = {
        {"--source", "paths.source"},       {"--corpus", "paths.corpus"},
        {"--index", "paths.index"},         {"--generations", "paths.generations"},
        {"--out", "paths.out"},             {"--matches", "paths.matches"},
        {"--grams", "paths.grams"},         {"--freqtable", "paths.freqtable"},
        {"--scores", "paths.scores"},       {"--transcript", "paths.transcript"},
    };

    std::map<std::string, std::map<std::string, std::string>> flag_values;
    for (const auto& sub : subs) {
        auto* cmd = app.add_subcommand(sub.name, sub.help);
        cmd->fallthrough();  // global flags may follow the subcommand
        for (const auto& pf : path_flags)
            cmd->add_option_function<std::string>(
                pf.flag,
                [&flag_values, name = std::string(sub.name),
                 key = std::string(pf.key)](const std::string& v) {
                    flag_values[name][key] = v;
                });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    Ctx ctx;
    ctx.seed = seed;
    ctx.workers = workers;
    try {
        if (!config_path.empty()) ctx.cfg.load_file(config_path);
        if (app.count("--seed") > 0) ctx.cfg.set("seed", std::to_string(seed));
        for (const auto& o : overrides) ctx.cfg.apply_override(o);

        for (const auto& sub : subs) {
            auto* cmd = app.get_subcommand(sub.name);
            if (!cmd->parsed()) continue;
            for (const auto& [key, value] : flag_values[sub.name]) ctx.cfg.set(key, value);
            return sub.run(ctx);
        }
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        jlog("error", "config-error", {{"message", e.what()}});
        return 2;
    } catch (const io::IoError& e) {
        jlog("error", "io-error", {{"message", e.what()}});
        return 3;
    } catch (const DataError& e) {
        jlog("error", "data-error", {{"message", e.what()}});
        return 3;
    } catch (const std::exception& e) {
        jlog("error", "unexpected-error", {{"message", e.what()}});
        return 3;
    }
}
