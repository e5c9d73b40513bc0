#include "memaudit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

using nlohmann::json;

std::uint64_t FrequencyTable::total_observations() const {
    std::uint64_t n = 0;
    for (const auto& [r, nr] : counts) n += r * nr;
    return n;
}

std::uint64_t FrequencyTable::distinct_count() const {
    std::uint64_t n = 0;
    for (const auto& [r, nr] : counts) n += nr;
    return n;
}

FrequencyTable FrequencyTable::from_gram_set(const UniqueGramSet& grams) {
    FrequencyTable t;
    for (const auto& [digest, info] : grams.grams()) t.counts[info.observations] += 1;
    return t;
}

FrequencyTable FrequencyTable::from_item_counts(const std::vector<std::uint64_t>& per_item) {
    FrequencyTable t;
    for (std::uint64_t c : per_item)
        if (c > 0) t.counts[c] += 1;
    return t;
}

FrequencyTable FrequencyTable::from_matches(const std::vector<MatchReport>& reports) {
    std::unordered_map<Digest128, std::uint64_t, Digest128Hash> per_gram;
    for (const auto& r : reports)
        for (const auto& d : r.window_digests) per_gram[d] += 1;
    FrequencyTable t;
    for (const auto& [digest, c] : per_gram) t.counts[c] += 1;
    return t;
}

FrequencyTable FrequencyTable::load(const std::filesystem::path& path) {
    FrequencyTable t;
    json j = json::parse(io::read_file(path));
    for (auto& [key, value] : j.items()) {
        if (key.empty() || key[0] < '0' || key[0] > '9') continue;  // meta keys
        t.counts[std::stoull(key)] = value.get<std::uint64_t>();
    }
    return t;
}

void FrequencyTable::save(const std::filesystem::path& path) const {
    json j = json::object();
    for (const auto& [r, nr] : counts) j[std::to_string(r)] = nr;
    io::write_file(path, j.dump(2) + "\n");
}

double SmoothedCounts::at(std::uint64_t r) const {
    if (r == 0) return 0.0;
    if (fallback) {
        auto it = support.find(r);
        return it == support.end() ? 0.0 : it->second;
    }
    if (r < switch_r) {
        auto it = support.find(r);
        if (it != support.end()) return it->second;
    }
    return std::exp(intercept + slope * std::log(static_cast<double>(r)));
}

SmoothedCounts smooth(const FrequencyTable& freq) {
    if (freq.counts.empty()) throw ConfigError("cannot smooth an empty frequency table");

    std::vector<std::uint64_t> rs;
    std::vector<double> ns;
    for (const auto& [r, nr] : freq.counts) {
        if (nr == 0) continue;
        rs.push_back(r);
        ns.push_back(static_cast<double>(nr));
    }

    SmoothedCounts out;
    if (rs.size() < 2) {
        out.fallback = true;
        for (std::size_t j = 0; j < rs.size(); ++j) out.support[rs[j]] = ns[j];
        return out;
    }

    // Averaged-neighbor transform: Z_r = N_r / (0.5 (t - q)) spreads each
    // count over the gap around it so sparse high-r rows regress sensibly.
    const std::size_t m = rs.size();
    std::vector<double> xs(m), ys(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double q = j == 0 ? 0.0 : static_cast<double>(rs[j - 1]);
        const double t = j + 1 < m ? static_cast<double>(rs[j + 1])
                                   : 2.0 * static_cast<double>(rs[j]) - q;
        const double z = ns[j] / (0.5 * (t - q));
        xs[j] = std::log(static_cast<double>(rs[j]));
        ys[j] = std::log(z);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < m; ++j) {
        sx += xs[j];
        sy += ys[j];
        sxx += xs[j] * xs[j];
        sxy += xs[j] * ys[j];
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (denom <= 0.0) {
        out.fallback = true;
        for (std::size_t j = 0; j < m; ++j) out.support[rs[j]] = ns[j];
        return out;
    }
    out.slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / static_cast<double>(m);

    auto regressed = [&](double r) { return std::exp(out.intercept + out.slope * std::log(r)); };

    // Standard switch rule: keep the empirical (Turing) row while it differs
    // from the regression by more than 1.65 standard deviations; once the
    // difference is insignificant, or the next row is missing, use the
    // regression from there on.
    bool switched = false;
    out.switch_r = rs.back() + 1;
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint64_t r = rs[j];
        if (!switched) {
            const std::uint64_t nr1 = freq.n_r(r + 1);
            if (nr1 == 0) {
                switched = true;
            } else {
                const double nr = ns[j];
                const double turing = (static_cast<double>(r) + 1.0) * static_cast<double>(nr1) / nr;
                const double lgt =
                    (static_cast<double>(r) + 1.0) * regressed(static_cast<double>(r + 1)) /
                    regressed(static_cast<double>(r));
                const double ratio = static_cast<double>(nr1) / nr;
                const double sd = (static_cast<double>(r) + 1.0) *
                                  std::sqrt(ratio / nr * (1.0 + ratio));
                if (std::abs(turing - lgt) <= 1.65 * sd) switched = true;
            }
            if (switched) out.switch_r = r;
        }
        out.support[r] = r >= out.switch_r ? regressed(static_cast<double>(r)) : ns[j];
    }
    return out;
}

NextDrawProbabilities good_turing_next(const FrequencyTable& freq, bool use_smoothing) {
    const std::uint64_t total = freq.total_observations();
    if (total == 0) throw ConfigError("good_turing_next needs at least one observation");
    const double n = static_cast<double>(total);
    const double n1 = static_cast<double>(freq.n_r(1));

    NextDrawProbabilities out;
    std::vector<std::pair<std::uint64_t, double>> masses;

    if (!use_smoothing) {
        out.p_novel = n1 / n;
        for (const auto& [r, nr] : freq.counts)
            if (nr > 0)
                masses.emplace_back(r, static_cast<double>(r) * static_cast<double>(nr));
    } else {
        const SmoothedCounts s = smooth(freq);
        out.smoothing_fallback = s.fallback;
        if (n1 > 0.0)
            out.p_novel = n1 / n;
        else if (s.fallback)
            out.p_novel = 1.0 / (n + 1.0);
        else
            out.p_novel = 0.0;
        for (const auto& [r, nr] : freq.counts) {
            if (nr == 0) continue;
            const double sr = s.at(r);
            const double sr1 = s.at(r + 1);
            double mass;
            if (sr > 0.0 && sr1 > 0.0) {
                const double r_star = (static_cast<double>(r) + 1.0) * sr1 / sr;
                mass = r_star * static_cast<double>(nr);
            } else {
                mass = static_cast<double>(r) * static_cast<double>(nr);
            }
            masses.emplace_back(r, mass);
        }
    }

    double mass_total = 0.0;
    for (const auto& [r, m] : masses) mass_total += m;
    if (mass_total <= 0.0) {
        // nothing usable from the adjusted counts; spread by raw frequency
        masses.clear();
        for (const auto& [r, nr] : freq.counts)
            if (nr > 0)
                masses.emplace_back(r, static_cast<double>(r) * static_cast<double>(nr));
        mass_total = 0.0;
        for (const auto& [r, m] : masses) mass_total += m;
    }
    const double scale = mass_total > 0.0 ? (1.0 - out.p_novel) / mass_total : 0.0;
    for (auto& [r, m] : masses) out.class_probs.emplace_back(r, m * scale);
    return out;
}

namespace {

struct ReplicateOutcome {
    std::uint64_t final_distinct = 0;
    std::vector<std::uint64_t> trajectory;  // distinct at each checkpoint
};

ReplicateOutcome run_replicate(const FrequencyTable& start, const SequentialGtOptions& opts,
                               std::uint64_t seed, const std::vector<std::uint64_t>& checkpoints) {
    FrequencyTable table = start;
    Rng rng(seed);
    std::uint64_t total = table.total_observations();
    std::uint64_t distinct = table.distinct_count();

    // The regression is refreshed every resmooth_every draws; between
    // refreshes masses are recomputed from the live counts with the cached
    // fit, which keeps per-draw cost at O(support).
    SmoothedCounts cached;
    std::uint64_t draws_since_smooth = 0;
    bool have_smooth = false;

    ReplicateOutcome outcome;
    std::size_t next_checkpoint = 0;

    std::vector<std::pair<std::uint64_t, double>> masses;
    for (std::uint64_t step = 0; step < opts.horizon; ++step) {
        if (!have_smooth || draws_since_smooth >= opts.resmooth_every) {
            cached = smooth(table);
            draws_since_smooth = 0;
            have_smooth = true;
        }
        ++draws_since_smooth;

        const double n = static_cast<double>(total);
        const double n1 = static_cast<double>(table.n_r(1));
        double p_novel;
        if (n1 > 0.0)
            p_novel = n1 / n;
        else if (cached.fallback)
            p_novel = 1.0 / (n + 1.0);
        else
            p_novel = 0.0;

        masses.clear();
        double mass_total = 0.0;
        for (const auto& [r, nr] : table.counts) {
            if (nr == 0) continue;
            const double sr = cached.at(r);
            const double sr1 = cached.at(r + 1);
            double mass;
            if (sr > 0.0 && sr1 > 0.0)
                mass = (static_cast<double>(r) + 1.0) * sr1 / sr * static_cast<double>(nr);
            else
                mass = static_cast<double>(r) * static_cast<double>(nr);
            masses.emplace_back(r, mass);
            mass_total += mass;
        }

        const double u = rng.uniform_real();
        bool novel;
        if (mass_total <= 0.0)
            novel = true;
        else
            novel = u < p_novel;
        if (novel) {
            table.counts[1] += 1;
            ++distinct;
        } else {
            // pick the class proportionally to its adjusted mass
            double target = (u - p_novel) / (1.0 - p_novel) * mass_total;
            std::uint64_t chosen = masses.back().first;
            for (const auto& [r, m] : masses) {
                if (target < m) {
                    chosen = r;
                    break;
                }
                target -= m;
            }
            auto it = table.counts.find(chosen);
            if (it->second == 1)
                table.counts.erase(it);
            else
                it->second -= 1;
            table.counts[chosen + 1] += 1;
        }
        ++total;

        while (next_checkpoint < checkpoints.size() && step + 1 >= checkpoints[next_checkpoint]) {
            outcome.trajectory.push_back(distinct);
            ++next_checkpoint;
        }
    }
    while (next_checkpoint < checkpoints.size()) {
        outcome.trajectory.push_back(distinct);
        ++next_checkpoint;
    }
    outcome.final_distinct = distinct;
    return outcome;
}

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    const double idx = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

EstimateResult sequential_gt(const FrequencyTable& freq, const SequentialGtOptions& opts) {
    if (freq.total_observations() == 0)
        throw ConfigError("sequential_gt needs a non-empty frequency table");
    if (opts.replicates < 1) throw ConfigError("replicates must be >= 1");

    EstimateResult result;
    result.method = "sequential-good-turing";
    result.seed = opts.seed;
    result.horizon = opts.horizon;
    result.replicates = opts.replicates;

    const std::uint64_t distinct0 = freq.distinct_count();
    const std::uint64_t total0 = freq.total_observations();
    if (opts.horizon == 0) {
        result.point_estimate = static_cast<double>(distinct0);
        result.band_low = result.band_high = result.point_estimate;
        result.trajectory.points.emplace_back(total0, result.point_estimate);
        return result;
    }

    std::vector<std::uint64_t> checkpoints;
    const std::size_t traj_n = std::max<std::size_t>(2, opts.trajectory_points);
    for (std::size_t i = 1; i <= traj_n; ++i)
        checkpoints.push_back(opts.horizon * i / traj_n);
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    std::vector<std::uint64_t> seeds(opts.replicates);
    {
        Rng seeder(opts.seed);
        for (auto& s : seeds) s = seeder.fork_seed();
    }

    std::vector<ReplicateOutcome> outcomes(opts.replicates);
    parallel_for(opts.replicates, opts.workers, [&](std::size_t i) {
        outcomes[i] = run_replicate(freq, opts, seeds[i], checkpoints);
    });

    std::vector<double> finals;
    finals.reserve(opts.replicates);
    for (const auto& o : outcomes) finals.push_back(static_cast<double>(o.final_distinct));
    double sum = 0.0;
    for (double f : finals) sum += f;
    result.point_estimate = sum / static_cast<double>(finals.size());
    result.band_low = percentile(finals, 0.10);
    result.band_high = percentile(finals, 0.90);

    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        double mean = 0.0;
        for (const auto& o : outcomes) mean += static_cast<double>(o.trajectory[c]);
        mean /= static_cast<double>(outcomes.size());
        result.trajectory.points.emplace_back(total0 + checkpoints[c], mean);
    }
    return result;
}

EstimateResult chao1(const FrequencyTable& freq) {
    EstimateResult result;
    result.method = "chao1";
    const double distinct = static_cast<double>(freq.distinct_count());
    const double n1 = static_cast<double>(freq.n_r(1));
    const double n2 = static_cast<double>(freq.n_r(2));
    double extra;
    if (n2 > 0.0)
        extra = n1 * n1 / (2.0 * n2);
    else
        extra = n1 * (n1 - 1.0) / (2.0 * (n2 + 1.0));  // bias-corrected form
    result.point_estimate = distinct + extra;
    result.band_low = result.band_high = result.point_estimate;
    return result;
}

MarkRecaptureResult mark_recapture(const CaptureCounts& counts) {
    if (counts.overlap > std::min(counts.marked, counts.recaptured))
        throw ConfigError("mark-recapture overlap exceeds min(marked, recaptured)");
    MarkRecaptureResult out;
    if (counts.overlap == 0) {
        out.defined = false;
        out.estimate = static_cast<double>(counts.marked + counts.recaptured);
        return out;
    }
    out.defined = true;
    out.estimate = static_cast<double>(counts.marked) * static_cast<double>(counts.recaptured) /
                   static_cast<double>(counts.overlap);
    return out;
}

std::optional<CaptureCounts> derive_capture_counts(const std::vector<MatchReport>& reports,
                                                   std::uint64_t n_marked,
                                                   std::uint64_t k_samples) {
    std::unordered_set<Digest128, Digest128Hash> marked;
    std::unordered_set<Digest128, Digest128Hash> recaptured;
    CaptureCounts counts;
    bool marking = true;
    std::uint64_t recapture_seen = 0;
    for (const auto& r : reports) {
        for (const auto& d : r.window_digests) {
            if (marking) {
                marked.insert(d);
                if (marked.size() >= n_marked) marking = false;
            } else if (recapture_seen < k_samples) {
                ++recapture_seen;
                if (marked.contains(d) && recaptured.insert(d).second) ++counts.overlap;
            }
        }
    }
    if (marking || recapture_seen < k_samples) return std::nullopt;
    counts.marked = marked.size();
    counts.recaptured = k_samples;
    return counts;
}

SubsampleCurve subsample_curve(const UniqueGramSet& grams, const SuffixIndex& index,
                               const std::vector<ManifestEntry>& manifest,
                               const std::vector<double>& fractions, std::uint64_t seed) {
    const std::size_t doc_count = manifest.size();
    if (doc_count == 0) throw ConfigError("subsample_curve needs a non-empty manifest");

    std::vector<std::uint64_t> doc_starts;
    doc_starts.reserve(doc_count);
    for (const auto& e : manifest) doc_starts.push_back(e.offset);

    // One permutation; fraction s keeps its first ceil(s*D) documents, so the
    // subsets are nested and the curve is monotone by construction.
    std::vector<std::uint32_t> rank_of_doc(doc_count);
    {
        std::vector<std::uint32_t> perm(doc_count);
        for (std::size_t i = 0; i < doc_count; ++i) perm[i] = static_cast<std::uint32_t>(i);
        Rng rng(seed);
        for (std::size_t i = doc_count - 1; i > 0; --i) {
            const std::size_t j = rng.uniform(i + 1);
            std::swap(perm[i], perm[j]);
        }
        for (std::size_t pos = 0; pos < doc_count; ++pos) rank_of_doc[perm[pos]] = pos;
    }

    // Smallest selection rank that catches each gram.
    std::vector<std::uint32_t> min_rank;
    min_rank.reserve(grams.grams().size());
    for (const auto& [digest, info] : grams.grams()) {
        const TokenSpan gram = index.corpus_window(info.witness_offset, grams.gram_length);
        std::uint32_t best = UINT32_MAX;
        for (std::uint64_t offset : index.locate(gram)) {
            auto it = std::upper_bound(doc_starts.begin(), doc_starts.end(), offset);
            const std::size_t doc = static_cast<std::size_t>(it - doc_starts.begin()) - 1;
            best = std::min(best, rank_of_doc[doc]);
        }
        min_rank.push_back(best);
    }

    SubsampleCurve curve;
    for (double s : fractions) {
        const auto selected =
            static_cast<std::uint64_t>(std::ceil(s * static_cast<double>(doc_count)));
        std::uint64_t found = 0;
        for (std::uint32_t r : min_rank)
            if (r < selected) ++found;
        curve.points.push_back({s, found});
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (const auto& p : curve.points) {
        if (p.fraction <= 0.0 || p.found == 0) continue;
        const double x = std::log(p.fraction);
        const double y = std::log(static_cast<double>(p.found));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (m >= 2 && denom > 0.0) {
        curve.fit_exponent = (static_cast<double>(m) * sxy - sx * sy) / denom;
        const double log_a = (sy - curve.fit_exponent * sx) / static_cast<double>(m);
        curve.fit_scale = std::exp(log_a);
        curve.predicted_at_2x = curve.fit_scale * std::pow(2.0, curve.fit_exponent);
        curve.fit_valid = true;
    }
    return curve;
}

void save_estimate(const EstimateResult& result, const std::filesystem::path& path) {
    json j{{"method", result.method},
           {"point_estimate", result.point_estimate},
           {"band", {result.band_low, result.band_high}},
           {"seed", result.seed},
           {"horizon", result.horizon},
           {"replicates", result.replicates}};
    io::write_file(path, j.dump(2) + "\n");
}

void save_curve(const DiscoveryCurve& curve, const std::filesystem::path& path) {
    std::string out = "observations,distinct\n";
    for (const auto& [obs, distinct] : curve.points) {
        out += std::to_string(obs);
        out.push_back(',');
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", distinct);
        out += buf;
        out.push_back('\n');
    }
    io::write_file(path, out);
}

}  // namespace memaudit
