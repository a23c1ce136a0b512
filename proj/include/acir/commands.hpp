#pragma once

// Subcommand implementations behind the `acir` executable. Each returns the
// process exit code: 0 success, 1 validation or usage error, 2 runtime abort.

#include "acir/config.hpp"
#include "acir/experiments.hpp"
#include "acir/scheme.hpp"
#include "acir/svg.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace acir {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_abort = 2 };

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

inline bool check(const ValidationReport& report, std::ostream& err) {
    if (report.ok()) return true;
    err << "error: invalid configuration\n" << report.summary();
    return false;
}

}  // namespace detail

/// Simulates one path on grid run.n from stream (seed, 0) into path.csv.
inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        std::ostream& out, std::ostream& err) {
    const GridSpec grid{cfg.mc.T, cfg.run.n};
    if (!detail::check(validate_config(cfg, grid.n), err)) return exit_usage;
    const IncrementPanel panel =
        make_panel(RngStream{cfg.mc.seed, 0}, grid.n, grid.T, cfg.model.alpha, cfg.driver);
    const PathRecord rec = simulate_path(cfg.model, grid, panel.dW, panel.dZ);
    const auto path = out_dir / "path.csv";
    auto os = detail::open_output(path);
    write_path_csv(os, rec, provenance_header(cfg, "simulate"));
    out << "wrote " << path.string() << " (" << rec.values.size() << " rows, X_T = "
        << format_double(rec.values.back()) << ", D<0 events = " << rec.d_negative_count << ")\n";
    return exit_ok;
}

inline int run_strong_error(const RunConfig& cfg, const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path, const std::string& title,
                            std::ostream& out, std::ostream& err, ErrorEstimate* result = nullptr) {
    if (cfg.mc.base_grids.empty()) {
        err << "error: mc.base_grids is empty\n";
        return exit_usage;
    }
    for (long n : detail::simulated_grids(cfg.mc.base_grids))
        if (!detail::check(validate_config(cfg, n), err)) return exit_usage;
    if (cfg.mc.num_paths < 1 || cfg.mc.parallel_workers < 1) {
        err << "error: mc.num_paths and mc.workers must be positive\n";
        return exit_usage;
    }
    ErrorEstimate est;
    try {
        est = strong_error_study(cfg.model, cfg.driver, cfg.mc);
    } catch (const ExplosionAbort& e) {
        err << "error: " << e.what() << '\n';
        return exit_abort;
    }
    {
        auto os = detail::open_output(csv_path);
        write_error_csv(os, est, provenance_header(cfg, "strong-error"));
    }
    std::vector<std::pair<double, double>> points;
    for (const auto& g : est.grids)
        if (g.mean_abs_diff > 0.0) points.emplace_back(static_cast<double>(g.n), g.mean_abs_diff);
    if (!points.empty()) {
        auto os = detail::open_output(svg_path);
        os << render_loglog_svg({title, points});
    }
    for (const auto& g : est.grids)
        out << "n = " << g.n << "  error = " << format_double(g.mean_abs_diff)
            << "  stderr = " << format_double(g.std_error) << "  exploded = " << g.exploded_count
            << '\n';
    out << "fitted slope = " << format_double(est.fitted_slope)
        << " (stderr " << format_double(est.slope_stderr) << ")\n";
    if (result) *result = est;
    return exit_ok;
}

inline int cmd_strong_error(const RunConfig& cfg, const std::filesystem::path& out_dir,
                            std::ostream& out, std::ostream& err) {
    return run_strong_error(cfg, out_dir / "strong_error.csv", out_dir / "strong_error.svg",
                            "strong error, alpha = " + format_double(cfg.model.alpha), out, err);
}

/// One strong-error study per sweep value, written to strong_error_<j>.*
/// with j starting at 1, plus a sweep.csv summary of the fitted slopes.
inline int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir,
                     std::ostream& out, std::ostream& err) {
    if (!cfg.sweep || cfg.sweep->key.empty() || cfg.sweep->values.empty()) {
        err << "error: sweep needs [sweep] key and values\n";
        return exit_usage;
    }
    std::vector<std::string> rows;
    for (std::size_t j = 0; j < cfg.sweep->values.size(); ++j) {
        RunConfig panel_cfg = cfg;
        panel_cfg.sweep.reset();
        const double value = cfg.sweep->values[j];
        try {
            apply_setting(panel_cfg, cfg.sweep->key, format_double(value));
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return exit_usage;
        }
        const std::string tag = std::to_string(j + 1);
        out << "[" << tag << "] " << cfg.sweep->key << " = " << format_double(value) << '\n';
        ErrorEstimate est;
        const int code = run_strong_error(panel_cfg, out_dir / ("strong_error_" + tag + ".csv"),
                                          out_dir / ("strong_error_" + tag + ".svg"),
                                          cfg.sweep->key + " = " + format_double(value), out, err,
                                          &est);
        if (code != exit_ok) return code;
        rows.push_back(tag + "," + format_double(value) + "," + format_double(est.fitted_slope) +
                       "," + format_double(est.slope_stderr));
    }
    auto os = detail::open_output(out_dir / "sweep.csv");
    for (const auto& line : provenance_header(cfg, "sweep")) os << "# " << line << '\n';
    os << "j,value,slope,slope_stderr\n";
    for (const auto& r : rows) os << r << '\n';
    return exit_ok;
}

inline int cmd_probe(const RunConfig& cfg, const std::filesystem::path& out_dir,
                     std::ostream& out, std::ostream& err) {
    const std::string& kind = cfg.run.probe;
    if (kind != "mgf" && kind != "dneg" && kind != "moment") {
        err << "error: unknown probe kind '" << kind << "' (expected mgf, dneg or moment)\n";
        return exit_usage;
    }
    const GridSpec grid{cfg.mc.T, cfg.run.n};
    const ProbeOptions opt{cfg.mc.seed, cfg.mc.parallel_workers, cfg.mc.T};
    std::vector<ProbeResult> results;

    if (kind == "mgf") {
        if (!cfg.driver.is_stable()) {
            err << "error: the mgf probe needs driver.kind = stable\n";
            return exit_usage;
        }
        if (!validate(cfg.model).passed("alpha in (1, 2)")) {
            err << "error: alpha must lie in (1, 2), got " << format_double(cfg.model.alpha) << '\n';
            return exit_usage;
        }
        if (!(cfg.run.dt > 0.0) || cfg.run.q_list.empty() || cfg.run.num_draws < 2) {
            err << "error: mgf probe needs run.dt > 0, a non-empty run.q_list and run.num_draws >= 2\n";
            return exit_usage;
        }
        for (double q : cfg.run.q_list)
            if (!(q > 0.0)) {
                err << "error: every q in run.q_list must be positive\n";
                return exit_usage;
            }
        results = mgf_probe(cfg.driver, cfg.model.alpha, cfg.run.dt, cfg.run.q_list,
                            cfg.run.num_draws, cfg.mc.seed);
    } else if (kind == "dneg") {
        if (!detail::check(validate_config(cfg, grid.n), err)) return exit_usage;
        if (cfg.driver.is_stable()) {
            results.push_back(dneg_probability_probe(cfg.model, grid, cfg.run.probe_paths, opt));
        } else {
            if (!detail::check(finite_activity_condition(cfg.model, cfg.driver, grid), err))
                return exit_usage;
            results.push_back(
                dneg_event_probe_poisson(cfg.model, cfg.driver, grid, cfg.run.probe_paths, opt));
        }
    } else {
        if (!(cfg.run.beta >= 1.0 && cfg.run.beta < cfg.model.alpha)) {
            err << "error: moment probe requires 1 <= beta < alpha (beta = "
                << format_double(cfg.run.beta) << ", alpha = " << format_double(cfg.model.alpha)
                << "); the beta-th moment is only known to be finite for beta < alpha\n";
            return exit_usage;
        }
        if (!detail::check(validate_config(cfg, grid.n), err)) return exit_usage;
        results.push_back(
            moment_probe(cfg.model, grid, cfg.run.beta, cfg.run.probe_paths, cfg.driver, opt));
    }

    auto os = detail::open_output(out_dir / ("probe_" + kind + ".csv"));
    for (const auto& line : provenance_header(cfg, "probe")) os << "# " << line << '\n';
    os << "quantity,parameter,estimate,stderr,reference,verdict\n";
    for (const auto& r : results) {
        out << (r.pass ? "PASS " : "FAIL ") << r.quantity;
        if (!std::isnan(r.parameter)) out << " param=" << format_double(r.parameter);
        out << " estimate=" << format_double(r.estimate) << " stderr=" << format_double(r.std_error)
            << " reference=" << format_double(r.reference_value);
        if (!r.note.empty()) out << " (" << r.note << ")";
        out << '\n';
        os << r.quantity << ',' << format_double(r.parameter) << ',' << format_double(r.estimate)
           << ',' << format_double(r.std_error) << ',' << format_double(r.reference_value) << ','
           << (r.pass ? "PASS" : "FAIL") << '\n';
    }
    return exit_ok;
}

}  // namespace acir
