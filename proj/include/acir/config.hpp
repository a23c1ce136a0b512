#pragma once

// Flat `key = value` run configuration with one section per module:
//
//   [model]  a, k, sigma1, sigma2, alpha, x0, trunc_H (number or "unbounded")
//   [driver] kind (stable | poisson), intensity
//   [mc]     num_paths, base_grids (comma list), seed, workers, T
//   [run]    n, probe (mgf | dneg | moment), beta, q_list, dt, num_draws, probe_paths
//   [sweep]  key (e.g. model.sigma2), values (comma list)
//
// Missing keys keep their defaults; unknown sections or keys are errors.

#include "acir/experiments.hpp"
#include "acir/format.hpp"
#include "acir/model.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace acir {

inline constexpr const char* version_string = "0.1.0";

struct RunOptions {
    long n = 128;
    std::string probe = "mgf";
    double beta = 1.0;
    std::vector<double> q_list{0.5, 1.0, 2.0};
    double dt = 0.01;
    long num_draws = 1'000'000;
    long probe_paths = 10'000;

    friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

struct SweepSpec {
    std::string key;
    std::vector<double> values;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct RunConfig {
    ModelParams model;
    DriverSpec driver;
    MCConfig mc;
    RunOptions run;
    std::optional<SweepSpec> sweep;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

template <class T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(values[i]);
        else
            out += std::to_string(values[i]);
    }
    return out;
}

inline double to_real(const std::string& key, const std::string& text) {
    try {
        return parse_double(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
    }
}

inline long to_long(const std::string& key, const std::string& text) {
    const double v = to_real(key, text);
    const auto n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
        throw ConfigError("config: " + key + " expects an integer, got '" + text + "'");
    return n;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size())
        throw ConfigError("config: " + key + " expects an unsigned integer, got '" + text + "'");
    return v;
}

}  // namespace detail

/// Sets one dotted key (section.name) from its textual value.
inline void apply_setting(RunConfig& cfg, const std::string& dotted, const std::string& raw) {
    using namespace detail;
    const std::string value = trim(raw);
    const auto& k = dotted;
    if (k == "model.a") cfg.model.a = to_real(k, value);
    else if (k == "model.k") cfg.model.k = to_real(k, value);
    else if (k == "model.sigma1") cfg.model.sigma1 = to_real(k, value);
    else if (k == "model.sigma2") cfg.model.sigma2 = to_real(k, value);
    else if (k == "model.alpha") cfg.model.alpha = to_real(k, value);
    else if (k == "model.x0") cfg.model.x0 = to_real(k, value);
    else if (k == "model.trunc_H")
        cfg.model.trunc_H = (value == "unbounded") ? unbounded : to_real(k, value);
    else if (k == "driver.kind") {
        if (value == "stable") cfg.driver.kind = DriverKind::SpectrallyPositiveStable;
        else if (value == "poisson") cfg.driver.kind = DriverKind::CompensatedPoisson;
        else throw ConfigError("config: driver.kind must be stable or poisson, got '" + value + "'");
    } else if (k == "driver.intensity") cfg.driver.intensity = to_real(k, value);
    else if (k == "mc.num_paths") cfg.mc.num_paths = to_long(k, value);
    else if (k == "mc.base_grids") {
        cfg.mc.base_grids.clear();
        for (const auto& item : split_list(value)) cfg.mc.base_grids.push_back(to_long(k, item));
    } else if (k == "mc.seed") cfg.mc.seed = to_u64(k, value);
    else if (k == "mc.workers") cfg.mc.parallel_workers = static_cast<int>(to_long(k, value));
    else if (k == "mc.T") cfg.mc.T = to_real(k, value);
    else if (k == "run.n") cfg.run.n = to_long(k, value);
    else if (k == "run.probe") cfg.run.probe = value;
    else if (k == "run.beta") cfg.run.beta = to_real(k, value);
    else if (k == "run.q_list") {
        cfg.run.q_list.clear();
        for (const auto& item : split_list(value)) cfg.run.q_list.push_back(to_real(k, item));
    } else if (k == "run.dt") cfg.run.dt = to_real(k, value);
    else if (k == "run.num_draws") cfg.run.num_draws = to_long(k, value);
    else if (k == "run.probe_paths") cfg.run.probe_paths = to_long(k, value);
    else if (k == "sweep.key") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->key = value;
    } else if (k == "sweep.values") {
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->values.clear();
        for (const auto& item : split_list(value)) cfg.sweep->values.push_back(to_real(k, item));
    } else
        throw ConfigError("config: unknown key '" + k + "'");
}

inline RunConfig parse_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw ConfigError("config: key '" + section + "' must live inside a [section]");
        for (const auto& [key, leaf] : body) {
            // trailing "# ..." or "; ..." comments
            const std::string& raw = leaf.data();
            apply_setting(cfg, section + "." + key, raw.substr(0, raw.find_first_of("#;")));
        }
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

/// Emits every field so that parse_config(emit_config(c)) == c. With
/// include_workers = false the worker count is left out, which keeps
/// provenance headers identical across worker counts.
inline std::string emit_config(const RunConfig& cfg, bool include_workers = true) {
    using detail::join;
    std::ostringstream os;
    const auto& m = cfg.model;
    os << "[model]\n"
       << "a = " << format_double(m.a) << '\n'
       << "k = " << format_double(m.k) << '\n'
       << "sigma1 = " << format_double(m.sigma1) << '\n'
       << "sigma2 = " << format_double(m.sigma2) << '\n'
       << "alpha = " << format_double(m.alpha) << '\n'
       << "x0 = " << format_double(m.x0) << '\n'
       << "trunc_H = " << (m.truncated() ? format_double(m.trunc_H) : "unbounded") << '\n';
    os << "[driver]\n"
       << "kind = " << to_string(cfg.driver.kind) << '\n'
       << "intensity = " << format_double(cfg.driver.intensity) << '\n';
    os << "[mc]\n"
       << "num_paths = " << cfg.mc.num_paths << '\n'
       << "base_grids = " << join(cfg.mc.base_grids) << '\n'
       << "seed = " << cfg.mc.seed << '\n';
    if (include_workers) os << "workers = " << cfg.mc.parallel_workers << '\n';
    os << "T = " << format_double(cfg.mc.T) << '\n';
    os << "[run]\n"
       << "n = " << cfg.run.n << '\n'
       << "probe = " << cfg.run.probe << '\n'
       << "beta = " << format_double(cfg.run.beta) << '\n'
       << "q_list = " << join(cfg.run.q_list) << '\n'
       << "dt = " << format_double(cfg.run.dt) << '\n'
       << "num_draws = " << cfg.run.num_draws << '\n'
       << "probe_paths = " << cfg.run.probe_paths << '\n';
    if (cfg.sweep) {
        os << "[sweep]\n"
           << "key = " << cfg.sweep->key << '\n'
           << "values = " << join(cfg.sweep->values) << '\n';
    }
    return os.str();
}

/// Header lines for CSV provenance: version plus the full configuration.
inline std::vector<std::string> provenance_header(const RunConfig& cfg, const std::string& command) {
    std::vector<std::string> lines{std::string("acir ") + version_string + " " + command};
    std::istringstream is(emit_config(cfg, false));
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

/// Checks a configuration before any simulation starts.
inline ValidationReport validate_config(const RunConfig& cfg, long n) {
    ValidationReport r = validate(cfg.model, GridSpec{cfg.mc.T, n});
    if (!cfg.driver.is_stable())
        r.add("driver intensity > 0", cfg.driver.intensity > 0.0,
              "intensity = " + format_double(cfg.driver.intensity));
    return r;
}

}  // namespace acir
