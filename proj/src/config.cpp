#include "perfrec/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& key, std::size_t line) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw InputError("field '" + key + "': expected a number, got '" + text + "'", line);
    return value;
}

bool parse_bool(const std::string& text, const std::string& key, std::size_t line) {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw InputError("field '" + key + "': expected true or false, got '" + text + "'", line);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& piece : split_list(text)) {
        const auto dash = piece.find('-', 1);
        if (dash == std::string::npos) {
            seeds.push_back(parse_number<std::uint64_t>(piece, "seeds", 0));
            continue;
        }
        const auto lo = parse_number<std::uint64_t>(trim(piece.substr(0, dash)), "seeds", 0);
        const auto hi = parse_number<std::uint64_t>(trim(piece.substr(dash + 1)), "seeds", 0);
        if (hi < lo) throw InputError("field 'seeds': empty range '" + piece + "'");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    if (seeds.empty()) throw InputError("field 'seeds': must list at least one seed");
    return seeds;
}

std::vector<ExperimentConfig> parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig base;
    std::vector<std::string> settings, methods;
    std::map<std::string, std::size_t> seen;
    auto resolve_path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };

    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("expected 'key = value', got '" + line + "'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw InputError("missing key before '='", lineno);
        if (!seen.emplace(key, lineno).second) throw InputError("duplicate key '" + key + "'", lineno);
        try {
            if (key == "setting") settings = split_list(value);
            else if (key == "method") methods = split_list(value);
            else if (key == "seeds") base.seeds = parse_seed_list(value);
            else if (key == "profile") base.profile = value;
            else if (key == "train_rows") base.train_rows = parse_number<std::size_t>(value, key, lineno);
            else if (key == "cohort_size") base.cohort_size = parse_number<std::size_t>(value, key, lineno);
            else if (key == "target_success") base.target_success = parse_number<double>(value, key, lineno);
            else if (key == "decision_threshold") base.decision_threshold = parse_number<double>(value, key, lineno);
            else if (key == "penalty") base.penalty = parse_penalty(value);
            else if (key == "noise") base.noise = parse_noise_mode(value);
            else if (key == "min_bucket") base.min_bucket = parse_number<std::size_t>(value, key, lineno);
            else if (key == "samples") base.samples = parse_number<std::size_t>(value, key, lineno);
            else if (key == "output_dir") base.output_dir = value;
            else if (key == "calibration_seed")
                base.setting_options.calibration_seed = parse_number<std::uint64_t>(value, key, lineno);
            else if (key == "calibration_rows")
                base.setting_options.calibration_rows = parse_number<std::size_t>(value, key, lineno);
            else if (key == "gpa_csv") base.setting_options.gpa_csv = resolve_path(value);
            else if (key == "gpa_graph") {
                base.gpa_graph_file = resolve_path(value);
                base.setting_options.gpa_graph = read_text(base.gpa_graph_file);
            } else if (key == "gpa_standardize")
                base.setting_options.gpa_standardize = parse_bool(value, key, lineno);
            else if (key.rfind("gpa_column.", 0) == 0)
                base.setting_options.gpa_columns[key.substr(11)] = value;
            else throw InputError("unknown key '" + key + "'", lineno);
        } catch (const InputError& e) {
            if (e.line() > 0) throw;
            throw InputError(e.what(), lineno);
        } catch (const Error& e) {
            throw InputError(std::string("field '") + key + "': " + e.what(), lineno);
        }
    }
    if (settings.empty()) throw InputError("field 'setting': missing");
    if (methods.empty()) methods = {to_string(base.method)};

    std::vector<ExperimentConfig> out;
    for (const auto& s : settings)
        for (const auto& m : methods) {
            ExperimentConfig c = base;
            c.setting = s;
            try {
                c.method = parse_method(m);
            } catch (const Error& e) {
                throw InputError(std::string("field 'method': ") + e.what(), seen.count("method") ? seen["method"] : 0);
            }
            c.resolve();
            out.push_back(std::move(c));
        }
    return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
    return parse_config(read_text(path), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> e;
    std::string seeds;
    for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    e.emplace_back("setting", c.setting);
    e.emplace_back("method", to_string(c.method));
    e.emplace_back("seeds", seeds);
    e.emplace_back("profile", c.profile);
    e.emplace_back("train_rows", std::to_string(c.resolved_train_rows()));
    e.emplace_back("cohort_size", std::to_string(c.resolved_cohort_size()));
    e.emplace_back("target_success", fmt(c.target_success));
    e.emplace_back("decision_threshold", fmt(c.decision_threshold));
    e.emplace_back("penalty", to_string(c.penalty));
    e.emplace_back("noise", to_string(c.noise));
    e.emplace_back("min_bucket", std::to_string(c.min_bucket));
    e.emplace_back("samples", std::to_string(c.samples));
    e.emplace_back("calibration_seed", std::to_string(c.setting_options.calibration_seed));
    e.emplace_back("calibration_rows", std::to_string(c.setting_options.calibration_rows));
    if (!c.output_dir.empty()) e.emplace_back("output_dir", c.output_dir.string());
    if (!c.setting_options.gpa_csv.empty()) {
        e.emplace_back("gpa_csv", std::filesystem::absolute(c.setting_options.gpa_csv).string());
        if (!c.gpa_graph_file.empty())
            e.emplace_back("gpa_graph", std::filesystem::absolute(c.gpa_graph_file).string());
        e.emplace_back("gpa_standardize", c.setting_options.gpa_standardize ? "true" : "false");
        for (const auto& [node, col] : c.setting_options.gpa_columns) e.emplace_back("gpa_column." + node, col);
    }
    return e;
}

std::string to_conf(const ExperimentConfig& config) {
    std::string out = "# resolved experiment config (perfrec " + version_string() + ")\n";
    for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
    return out;
}

}  // namespace perfrec
