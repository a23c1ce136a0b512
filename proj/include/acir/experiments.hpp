#pragma once

// Monte Carlo harness: coupled strong-error study, log-log slope fitting and
// empirical probes of the scheme's probabilistic properties.
//
// Every path p draws its noise from RngStream{seed, p}; workers only split
// the path range, and all reductions run in path-index order. Results are
// therefore independent of the worker count.

#include "acir/drivers.hpp"
#include "acir/model.hpp"
#include "acir/scheme.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace acir {

struct MCConfig {
    long num_paths = 1L << 16;
    std::vector<long> base_grids{128, 256, 512, 1024};
    std::uint64_t seed = 1;
    int parallel_workers = 1;
    double T = 1.0;

    friend bool operator==(const MCConfig&, const MCConfig&) = default;
};

/// Coupled error between grid n and grid 2n at time T.
struct GridError {
    long n = 0;
    double mean_abs_diff = 0.0;
    double std_error = 0.0;
    long exploded_count = 0;
};

/// E[X_T] on one simulated grid.
struct TerminalMoment {
    long n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    long d_negative_events = 0;
    long exploded_count = 0;
};

struct ErrorEstimate {
    std::vector<GridError> grids;
    std::vector<TerminalMoment> terminal;
    double fitted_slope = std::numeric_limits<double>::quiet_NaN();
    double slope_stderr = std::numeric_limits<double>::quiet_NaN();
    long num_paths = 0;
    long exploded_paths = 0;
};

/// Raised when more than `max_exploded_fraction` of the paths overflowed.
class ExplosionAbort : public std::runtime_error {
public:
    ExplosionAbort(long exploded, long total)
        : std::runtime_error("aborting: " + std::to_string(exploded) + " of " +
                             std::to_string(total) + " paths exploded"),
          exploded_(exploded),
          total_(total) {}
    long exploded() const noexcept { return exploded_; }
    long total() const noexcept { return total_; }

private:
    long exploded_;
    long total_;
};

inline constexpr double max_exploded_fraction = 1e-3;

struct SlopeFit {
    double slope = 0.0;           // error ~ n^{-slope}
    double standard_error = 0.0;  // NaN with exactly two points
};

/// Ordinary least squares of log(error) on log(n).
inline SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least two points");
    const double m = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (auto [n, err] : points) {
        if (!(n > 0.0) || !(err > 0.0))
            throw std::invalid_argument("fit_loglog_slope: grid sizes and errors must be positive");
        sx += std::log(n);
        sy += std::log(err);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (auto [n, err] : points) {
        const double dx = std::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(err) - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: grid sizes must differ");
    const double beta = sxy / sxx;
    SlopeFit fit;
    fit.slope = -beta;
    if (points.size() == 2) {
        fit.standard_error = std::numeric_limits<double>::quiet_NaN();
    } else {
        double rss = 0.0;
        for (auto [n, err] : points) {
            const double r = std::log(err) - (my + beta * (std::log(n) - mx));
            rss += r * r;
        }
        fit.standard_error = std::sqrt(rss / (m - 2.0) / sxx);
    }
    return fit;
}

namespace detail {

/// Runs body(begin, end) over contiguous slices of [0, count).
inline void parallel_ranges(long count, int workers,
                            const std::function<void(long, long)>& body) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max(1L, count))));
    if (workers == 1) {
        body(0, count);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        const long chunk = (count + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const long begin = std::min(count, w * chunk);
            const long end = std::min(count, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct MeanAccumulator {
    long count = 0;
    double mean_ = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++count;
        const double delta = v - mean_;
        mean_ += delta / static_cast<double>(count);
        m2 += delta * (v - mean_);
    }
    double mean() const {
        return count ? mean_ : std::numeric_limits<double>::quiet_NaN();
    }
    double std_error() const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        return std::sqrt(m2 / (n - 1.0) / n);
    }
};

/// Grid list {n, 2n : n in base}, sorted and deduplicated.
inline std::vector<long> simulated_grids(std::span<const long> base) {
    std::vector<long> grids;
    for (long n : base) {
        grids.push_back(n);
        grids.push_back(2 * n);
    }
    std::sort(grids.begin(), grids.end());
    grids.erase(std::unique(grids.begin(), grids.end()), grids.end());
    return grids;
}

/// Per-path outcome on every simulated grid, stored path-major.
struct CoupledRun {
    std::vector<long> grids;
    long num_paths = 0;
    std::vector<double> terminal;     // num_paths * grids.size()
    std::vector<long> d_negative;     // num_paths * grids.size()
    std::vector<unsigned char> exploded;

    std::size_t at(long path, std::size_t g) const {
        return static_cast<std::size_t>(path) * grids.size() + g;
    }
};

inline CoupledRun run_coupled(const ModelParams& params, const DriverSpec& driver,
                              std::vector<long> grids, long num_paths, double T,
                              std::uint64_t seed, int workers) {
    require_valid(validate(params));
    if (grids.empty()) throw std::invalid_argument("no grids to simulate");
    if (num_paths < 1) throw std::invalid_argument("num_paths must be positive");
    const long fine_n = *std::max_element(grids.begin(), grids.end());
    for (long n : grids) {
        if (n < 1 || fine_n % n != 0)
            throw std::invalid_argument("grid " + std::to_string(n) +
                                        " does not divide the finest grid " + std::to_string(fine_n));
        require_valid(validate(params, GridSpec{T, n}));
    }
    if (!driver.is_stable() && !(driver.intensity > 0.0))
        throw std::invalid_argument("Poisson driver needs a positive intensity");

    std::vector<ImplicitStepper> steppers;
    for (long n : grids) steppers.emplace_back(params, T / static_cast<double>(n));

    CoupledRun run;
    run.grids = grids;
    run.num_paths = num_paths;
    const std::size_t cells = static_cast<std::size_t>(num_paths) * grids.size();
    run.terminal.assign(cells, 0.0);
    run.d_negative.assign(cells, 0);
    run.exploded.assign(cells, 0);

    // Coarse increments are summed from the next finer grid when the ratio is
    // a power of two; with the halving summation order this is bit-identical
    // to summing from the fine panel directly.
    std::vector<std::size_t> order(grids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return grids[l] > grids[r]; });

    parallel_ranges(num_paths, workers, [&](long begin, long end) {
        IncrementPanel panel;
        std::vector<std::vector<double>> dW(grids.size()), dZ(grids.size());
        for (long p = begin; p < end; ++p) {
            fill_panel(panel, RngStream{seed, static_cast<std::uint64_t>(p)}, fine_n, T,
                       params.alpha, driver);
            std::span<const double> src_w = panel.dW, src_z = panel.dZ;
            for (std::size_t g : order) {
                const auto n = static_cast<std::size_t>(grids[g]);
                const std::size_t ratio = src_w.size() / n;
                if (!std::has_single_bit(ratio)) {
                    src_w = panel.dW;
                    src_z = panel.dZ;
                }
                dW[g].resize(n);
                dZ[g].resize(n);
                aggregate_into(src_w, dW[g]);
                aggregate_into(src_z, dZ[g]);
                src_w = dW[g];
                src_z = dZ[g];
                const PathSummary s = run_to_terminal(steppers[g], params.x0, dW[g], dZ[g]);
                run.terminal[run.at(p, g)] = s.terminal;
                run.d_negative[run.at(p, g)] = s.d_negative_count;
                run.exploded[run.at(p, g)] = s.exploded ? 1 : 0;
            }
        }
    });
    return run;
}

}  // namespace detail

/// Estimates E|X^{2n}_T - X^n_T| for each n in mc.base_grids, all grids
/// driven by one shared fine panel per path, and fits the log-log slope.
inline ErrorEstimate strong_error_study(const ModelParams& params, const DriverSpec& driver,
                                        const MCConfig& mc) {
    if (mc.base_grids.empty()) throw std::invalid_argument("strong_error_study: base_grids is empty");
    for (long n : mc.base_grids)
        if (n < 1) throw std::invalid_argument("strong_error_study: grid sizes must be positive");
    if (mc.parallel_workers < 1) throw std::invalid_argument("strong_error_study: workers must be >= 1");

    const std::vector<long> grids = detail::simulated_grids(mc.base_grids);
    const detail::CoupledRun run =
        detail::run_coupled(params, driver, grids, mc.num_paths, mc.T, mc.seed, mc.parallel_workers);
    auto index_of = [&](long n) {
        return static_cast<std::size_t>(std::find(grids.begin(), grids.end(), n) - grids.begin());
    };

    ErrorEstimate est;
    est.num_paths = mc.num_paths;
    for (long p = 0; p < mc.num_paths; ++p) {
        bool any = false;
        for (std::size_t g = 0; g < grids.size(); ++g) any = any || run.exploded[run.at(p, g)];
        est.exploded_paths += any ? 1 : 0;
    }
    if (static_cast<double>(est.exploded_paths) >
        max_exploded_fraction * static_cast<double>(mc.num_paths))
        throw ExplosionAbort(est.exploded_paths, mc.num_paths);

    for (long n : mc.base_grids) {
        const std::size_t lo = index_of(n), hi = index_of(2 * n);
        detail::MeanAccumulator acc;
        GridError ge;
        ge.n = n;
        for (long p = 0; p < mc.num_paths; ++p) {
            if (run.exploded[run.at(p, lo)] || run.exploded[run.at(p, hi)]) {
                ++ge.exploded_count;
                continue;
            }
            acc.add(std::fabs(run.terminal[run.at(p, hi)] - run.terminal[run.at(p, lo)]));
        }
        ge.mean_abs_diff = acc.mean();
        ge.std_error = acc.std_error();
        est.grids.push_back(ge);
    }
    for (std::size_t g = 0; g < grids.size(); ++g) {
        detail::MeanAccumulator acc;
        TerminalMoment tm;
        tm.n = grids[g];
        for (long p = 0; p < mc.num_paths; ++p) {
            tm.d_negative_events += run.d_negative[run.at(p, g)];
            if (run.exploded[run.at(p, g)]) {
                ++tm.exploded_count;
                continue;
            }
            acc.add(run.terminal[run.at(p, g)]);
        }
        tm.mean = acc.mean();
        tm.std_error = acc.std_error();
        est.terminal.push_back(tm);
    }

    std::vector<std::pair<double, double>> points;
    for (const auto& ge : est.grids) points.emplace_back(static_cast<double>(ge.n), ge.mean_abs_diff);
    const bool fittable = points.size() >= 2 && std::all_of(points.begin(), points.end(), [](auto pt) {
                              return pt.second > 0.0 && std::isfinite(pt.second);
                          });
    if (fittable) {
        const SlopeFit fit = fit_loglog_slope(points);
        est.fitted_slope = fit.slope;
        est.slope_stderr = fit.standard_error;
    }
    return est;
}

/// `n,error,stderr,exploded` rows under `# ` header lines.
inline void write_error_csv(std::ostream& os, const ErrorEstimate& est,
                            std::span<const std::string> header) {
    for (const auto& line : header) os << "# " << line << '\n';
    os << "# fitted_slope = " << format_double(est.fitted_slope) << '\n';
    os << "# slope_stderr = " << format_double(est.slope_stderr) << '\n';
    os << "# num_paths = " << est.num_paths << '\n';
    os << "n,error,stderr,exploded\n";
    for (const auto& g : est.grids)
        os << g.n << ',' << format_double(g.mean_abs_diff) << ',' << format_double(g.std_error)
           << ',' << g.exploded_count << '\n';
}

/// Reads the rows written by write_error_csv (comment lines are skipped).
inline std::vector<GridError> read_error_csv(std::istream& is) {
    std::vector<GridError> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::string n, err, se, ex;
        if (!std::getline(fields, n, ',') || !std::getline(fields, err, ',') ||
            !std::getline(fields, se, ',') || !std::getline(fields, ex, ','))
            throw std::runtime_error("error csv: malformed row '" + line + "'");
        rows.push_back({std::stol(n), parse_double(err), parse_double(se), std::stol(ex)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Probes

struct ProbeResult {
    std::string quantity;  // dneg_prob | moment | mgf
    double parameter = std::numeric_limits<double>::quiet_NaN();  // q or beta
    double estimate = 0.0;
    double std_error = 0.0;
    double reference_value = 0.0;
    bool pass = false;
    std::string note;
};

struct ProbeOptions {
    std::uint64_t seed = 1;
    int workers = 1;
    double T = 1.0;
};

/// Explicit upper bound on P[D_{i+1} < 0 | F_i] for the stable driver:
/// exp(-(a - sigma1^2/2) sin(pi(alpha-1)/2)^{1/(alpha-1)}
///     sigma2^{-alpha/(alpha-1)} dt^{-(2-alpha)/(alpha-1)}).
inline double dneg_probability_bound(const ModelParams& p, double dt) {
    if (p.sigma2 == 0.0) return 0.0;
    const double am1 = p.alpha - 1.0;
    const double log_rate = std::log(p.effective_drift()) +
                            std::log(std::sin(std::numbers::pi * am1 / 2.0)) / am1 -
                            p.alpha / am1 * std::log(p.sigma2) - (2.0 - p.alpha) / am1 * std::log(dt);
    return std::exp(-std::exp(log_rate));
}

struct DNegCount {
    long events = 0;
    long steps = 0;
    long exploded_paths = 0;
};

/// Counts steps with D < 0 over `num_paths` independent paths on `grid`.
inline DNegCount count_d_negative(const ModelParams& params, const DriverSpec& driver,
                                  const GridSpec& grid, long num_paths, const ProbeOptions& opt) {
    const detail::CoupledRun run =
        detail::run_coupled(params, driver, {grid.n}, num_paths, grid.T, opt.seed, opt.workers);
    DNegCount c;
    for (long p = 0; p < num_paths; ++p) {
        c.events += run.d_negative[run.at(p, 0)];
        c.exploded_paths += run.exploded[run.at(p, 0)];
    }
    c.steps = num_paths * grid.n;
    return c;
}

/// Empirical frequency of D < 0 against the explicit bound (stable driver).
inline ProbeResult dneg_probability_probe(const ModelParams& params, const GridSpec& grid,
                                          long num_paths, const ProbeOptions& opt = {}) {
    const DNegCount c = count_d_negative(params, DriverSpec::stable(), grid, num_paths, opt);
    ProbeResult r;
    r.quantity = "dneg_prob";
    const double steps = static_cast<double>(c.steps);
    r.estimate = static_cast<double>(c.events) / steps;
    r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / steps);
    r.reference_value = dneg_probability_bound(params, grid.dt());
    r.pass = r.estimate <= r.reference_value + 3.0 * r.std_error;
    r.note = std::to_string(c.events) + " events in " + std::to_string(c.steps) + " steps";
    return r;
}

/// Under the finite-activity condition D never goes negative; the probe
/// passes iff no event is observed. Throws if the condition fails.
inline ProbeResult dneg_event_probe_poisson(const ModelParams& params, const DriverSpec& driver,
                                            const GridSpec& grid, long num_paths,
                                            const ProbeOptions& opt = {}) {
    if (driver.is_stable())
        throw std::invalid_argument("dneg_event_probe_poisson: needs a compensated Poisson driver");
    require_valid(finite_activity_condition(params, driver, grid));
    const DNegCount c = count_d_negative(params, driver, grid, num_paths, opt);
    ProbeResult r;
    r.quantity = "dneg_prob";
    r.estimate = static_cast<double>(c.events) / static_cast<double>(c.steps);
    r.std_error = 0.0;
    r.reference_value = 0.0;
    r.pass = c.events == 0;
    r.note = std::to_string(c.events) + " events in " + std::to_string(c.steps) + " steps";
    return r;
}

/// E|X^n_T|^beta for 1 <= beta < alpha. The verdict requires a finite
/// estimate that is stable over the nested samples num_paths/4, num_paths/2
/// and num_paths (consecutive ratios within [0.5, 2]).
inline ProbeResult moment_probe(const ModelParams& params, const GridSpec& grid, double beta,
                                long num_paths, const DriverSpec& driver = DriverSpec::stable(),
                                const ProbeOptions& opt = {}) {
    if (!(beta >= 1.0) || !(beta < params.alpha))
        throw std::invalid_argument("moment_probe: requires 1 <= beta < alpha (beta = " +
                                    format_double(beta) + ", alpha = " +
                                    format_double(params.alpha) + ")");
    if (num_paths < 4) throw std::invalid_argument("moment_probe: num_paths must be at least 4");
    const detail::CoupledRun run =
        detail::run_coupled(params, driver, {grid.n}, num_paths, grid.T, opt.seed, opt.workers);

    const long sizes[3] = {num_paths / 4, num_paths / 2, num_paths};
    double estimates[3] = {};
    detail::MeanAccumulator acc;
    long exploded = 0;
    int stage = 0;
    for (long p = 0; p < num_paths; ++p) {
        if (run.exploded[run.at(p, 0)])
            ++exploded;
        else
            acc.add(std::pow(run.terminal[run.at(p, 0)], beta));
        while (stage < 3 && p + 1 == sizes[stage]) estimates[stage++] = acc.mean();
    }
    ProbeResult r;
    r.quantity = "moment";
    r.parameter = beta;
    r.estimate = acc.mean();
    r.std_error = acc.std_error();
    r.reference_value = estimates[1];
    const double ratio1 = estimates[1] / estimates[0];
    const double ratio2 = estimates[2] / estimates[1];
    auto in_band = [](double ratio) { return ratio >= 0.5 && ratio <= 2.0; };
    r.pass = std::isfinite(r.estimate) && in_band(ratio1) && in_band(ratio2);
    r.note = "nested estimates " + format_double(estimates[0]) + ", " + format_double(estimates[1]) +
             ", " + format_double(estimates[2]) + "; exploded " + std::to_string(exploded);
    return r;
}

/// Laplace transform reference exp(dt q^alpha / sin(pi (alpha-1)/2)).
inline double stable_laplace_reference(double alpha, double dt, double q) {
    return std::exp(dt * std::pow(q, alpha) * stable_laplace_constant(alpha));
}

/// Empirical E[exp(-q dZ)] against the Laplace transform of the stable
/// driver. Each q uses its own stream of `num_draws` increments.
inline std::vector<ProbeResult> mgf_probe(const DriverSpec& driver, double alpha, double dt,
                                          std::span<const double> q_list, long num_draws,
                                          std::uint64_t seed = 1) {
    if (!driver.is_stable()) throw std::invalid_argument("mgf_probe: needs the stable driver");
    if (!(dt > 0.0)) throw std::invalid_argument("mgf_probe: dt must be positive");
    if (num_draws < 2) throw std::invalid_argument("mgf_probe: num_draws must be at least 2");
    const StableSampler sampler(alpha);
    const double scale = std::pow(dt, 1.0 / alpha);
    std::vector<ProbeResult> out;
    for (std::size_t i = 0; i < q_list.size(); ++i) {
        const double q = q_list[i];
        if (!(q > 0.0)) throw std::invalid_argument("mgf_probe: q must be positive");
        Engine gen = RngStream{seed, i}.engine(Substream::jump);
        detail::MeanAccumulator acc;
        for (long d = 0; d < num_draws; ++d) acc.add(std::exp(-q * scale * sampler.unit(gen)));
        ProbeResult r;
        r.quantity = "mgf";
        r.parameter = q;
        r.estimate = acc.mean();
        r.std_error = acc.std_error();
        r.reference_value = stable_laplace_reference(alpha, dt, q);
        r.pass = std::fabs(r.estimate - r.reference_value) <= 3.0 * r.std_error;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace acir
