#include "memaudit/report.hpp"

#include <cctype>
#include <cstdio>

#include "memaudit/errors.hpp"
#include "memaudit/io_util.hpp"

namespace memaudit {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

}  // namespace

void KeyValueConfig::load_file(const std::filesystem::path& path) {
    for (const auto& raw : io::read_lines(path)) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == '[') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line without '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const std::size_t hash = value.find(" #");
        if (hash != std::string::npos) value = trim(value.substr(0, hash));
        if (key.empty()) throw ConfigError("config line with empty key: " + line);
        values_[key] = unquote(value);
    }
}

void KeyValueConfig::apply_override(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got: " + assignment);
    values_[trim(assignment.substr(0, eq))] = unquote(trim(assignment.substr(eq + 1)));
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an integer: " + it->second);
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an unsigned integer: " + it->second);
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + it->second);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + v);
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::size_t pos = 0;
    const std::string& v = it->second;
    while (pos <= v.size()) {
        const std::size_t comma = v.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? v.substr(pos) : v.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-numeric item: " + item);
        }
    }
    return out;
}

Digest128 KeyValueConfig::digest() const {
    std::string flat;
    for (const auto& [k, v] : values_) {
        flat += k;
        flat.push_back('=');
        flat += v;
        flat.push_back('\n');
    }
    return digest_string(flat);
}

json RunMeta::to_json() const {
    return json{{"tool_version", tool_version},
                {"config_digest", config_digest},
                {"corpus_digest", corpus_digest},
                {"seed", seed}};
}

std::string RunMeta::jsonl_line() const {
    return json{{"_meta", to_json()}}.dump() + "\n";
}

std::string RunMeta::csv_comment() const {
    return "# tool=" + tool_version + " config=" + config_digest + " corpus=" + corpus_digest +
           " seed=" + std::to_string(seed) + "\n";
}

namespace {

std::optional<json> read_json_if_present(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    return json::parse(io::read_file(path));
}

std::optional<json> read_csv_if_present(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    json rows = json::array();
    std::vector<std::string> header;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(comma == std::string::npos ? line.substr(pos)
                                                       : line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (header.empty()) {
            header = cells;
            continue;
        }
        json row = json::object();
        for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
            row[header[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

json build_audit_report(const std::filesystem::path& run_dir, const RunMeta& meta) {
    json report;
    report["meta"] = meta.to_json();
    json absent = json::array();

    auto attach = [&](const char* section, std::optional<json> value) {
        if (value)
            report[section] = std::move(*value);
        else
            absent.push_back(section);
    };

    attach("scan", read_json_if_present(run_dir / "summary.json"));
    attach("pii", read_json_if_present(run_dir / "pii_summary.json"));
    attach("discoverable", read_json_if_present(run_dir / "discoverable.json"));
    attach("duplicates", read_json_if_present(run_dir / "duplicates.json"));
    attach("subsample", read_json_if_present(run_dir / "subsample.json"));

    json estimates = json::object();
    for (const char* name : {"sequential-good-turing", "chao1", "mark-recapture"}) {
        auto e = read_json_if_present(run_dir / ("estimate." + std::string(name) + ".json"));
        if (e) estimates[name] = std::move(*e);
    }
    if (estimates.empty())
        absent.push_back("estimates");
    else
        report["estimates"] = std::move(estimates);

    attach("mi_precision", read_csv_if_present(run_dir / "precision.csv"));
    attach("wordrank", read_csv_if_present(run_dir / "wordrank.csv"));
    attach("ksweep", read_csv_if_present(run_dir / "ksweep.csv"));

    report["sections_absent"] = std::move(absent);
    return report;
}

void write_headline_csv(const json& report, const std::filesystem::path& path,
                        const RunMeta& meta) {
    std::string out = meta.csv_comment();
    out += "percent_tokens_memorized,unique_kgrams,extrapolated_kgrams\n";
    char buf[96];
    double pct = 0.0;
    std::uint64_t unique = 0;
    double extrapolated = 0.0;
    if (report.contains("scan")) {
        pct = report["scan"].value("percent_memorized", 0.0);
        unique = report["scan"].value("unique_kgrams", std::uint64_t{0});
    }
    if (report.contains("estimates") && report["estimates"].contains("sequential-good-turing"))
        extrapolated =
            report["estimates"]["sequential-good-turing"].value("point_estimate", 0.0);
    std::snprintf(buf, sizeof(buf), "%.4f,%llu,%.1f\n", pct,
                  static_cast<unsigned long long>(unique), extrapolated);
    out += buf;
    io::write_file(path, out);
}

}  // namespace memaudit
