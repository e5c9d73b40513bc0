#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memaudit/types.hpp"

namespace memaudit {

inline constexpr const char* kToolVersion = "0.1.0";

/// Flat key = value config: one archivable file, '#' comments, dotted keys,
/// comma lists. Flag overrides win over file values.
class KeyValueConfig {
public:
    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void apply_override(const std::string& assignment);  // "key=value"

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    /// Digest of the effective (merged) configuration, sorted key order.
    Digest128 digest() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Provenance stamped into every output file.
struct RunMeta {
    std::string tool_version = kToolVersion;
    std::string config_digest;
    std::string corpus_digest;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    std::string jsonl_line() const;   // {"_meta": {...}}\n
    std::string csv_comment() const;  // "# tool=... config=... corpus=... seed=...\n"
};

/// Merge whatever per-stage outputs exist under run_dir into one report.
/// Missing stages appear in sections_absent rather than failing the merge.
nlohmann::json build_audit_report(const std::filesystem::path& run_dir, const RunMeta& meta);

/// Table-1-shaped row: % tokens memorized, unique k-grams, extrapolated.
void write_headline_csv(const nlohmann::json& report, const std::filesystem::path& path,
                        const RunMeta& meta);

}  // namespace memaudit
