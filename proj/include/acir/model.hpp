#pragma once

// Parameterization of the alpha-CIR process
//
//   dX_t = (a - k X_t) dt + sigma1 |X_t|^{1/2} dW_t + sigma2 h(X_{t-}) dZ_t,
//   h(x) = min(|x|^{1/alpha}, H),
//
// together with the validity conditions under which the implicit scheme in
// scheme.hpp is well defined.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acir {

/// Sentinel for an untruncated jump coefficient.
inline constexpr double unbounded = std::numeric_limits<double>::infinity();

struct ModelParams {
    double a = 0.0;
    double k = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double alpha = 1.5;
    double x0 = 1.0;
    double trunc_H = unbounded;

    /// a - sigma1^2/2, the drift of the discriminant process.
    double effective_drift() const noexcept { return a - 0.5 * sigma1 * sigma1; }
    bool truncated() const noexcept { return std::isfinite(trunc_H); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform grid t_i = i T / n.
struct GridSpec {
    double T = 1.0;
    long n = 1;

    double dt() const noexcept { return T / static_cast<double>(n); }
    double time(long i) const noexcept {
        return i == n ? T : static_cast<double>(i) * T / static_cast<double>(n);
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class DriverKind { SpectrallyPositiveStable, CompensatedPoisson };

inline const char* to_string(DriverKind kind) noexcept {
    return kind == DriverKind::SpectrallyPositiveStable ? "stable" : "poisson";
}

/// Law of the jump driver Z. For the stable kind the index is taken from
/// ModelParams::alpha; the Poisson kind has unit jumps at rate `intensity`.
struct DriverSpec {
    DriverKind kind = DriverKind::SpectrallyPositiveStable;
    double intensity = 0.0;

    static DriverSpec stable() { return {}; }
    static DriverSpec poisson(double rate) {
        return {DriverKind::CompensatedPoisson, rate};
    }

    bool is_stable() const noexcept { return kind == DriverKind::SpectrallyPositiveStable; }

    friend bool operator==(const DriverSpec&, const DriverSpec&) = default;
};

/// Laplace exponent constant of the stable driver:
/// E[exp(-q Z_t)] = exp(t q^alpha * stable_laplace_constant(alpha)).
inline double stable_laplace_constant(double alpha) {
    return 1.0 / std::sin(std::numbers::pi * (alpha - 1.0) / 2.0);
}

/// gamma0 = -int_1^inf x nu(dx).
///
/// For the stable driver the Levy measure compatible with the Laplace
/// exponent above is nu(dx) = C x^{-1-alpha} dx on (0, inf) with
/// C = 1 / (sin(pi (alpha-1)/2) Gamma(-alpha)), since
/// int (e^{-qx} - 1 + qx) C x^{-1-alpha} dx = C Gamma(-alpha) q^alpha.
/// Hence gamma0 = -C / (alpha - 1). For unit Poisson jumps gamma0 = -lambda.
inline double driver_gamma0(const DriverSpec& driver, double alpha) {
    if (driver.is_stable()) {
        const double c = stable_laplace_constant(alpha) / std::tgamma(-alpha);
        return -c / (alpha - 1.0);
    }
    return -driver.intensity;
}

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool ok() const noexcept {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    bool passed(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c.passed;
        throw std::out_of_range("no validation check named " + name);
    }

    std::string summary() const {
        std::ostringstream os;
        for (const auto& c : checks)
            os << (c.passed ? "ok   " : "FAIL ") << c.name << ": " << c.detail << '\n';
        return os.str();
    }

    void add(std::string name, bool passed, std::string detail) {
        checks.push_back({std::move(name), passed, std::move(detail)});
    }
};

/// Thrown by entry points that require a passing ValidationReport.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(ValidationReport report)
        : std::invalid_argument("invalid model configuration:\n" + report.summary()),
          report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

namespace detail {
inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}
}  // namespace detail

/// Checks the standing parameter assumptions. Never throws.
inline ValidationReport validate(const ModelParams& p) {
    using detail::fmt;
    ValidationReport r;
    const double drift = p.effective_drift();
    r.add("a - sigma1^2/2 > 0", std::isfinite(drift) && drift > 0.0,
          "a - sigma1^2/2 = " + fmt(drift));
    r.add("alpha in (1, 2)", p.alpha > 1.0 && p.alpha < 2.0, "alpha = " + fmt(p.alpha));
    r.add("x0 > 0", std::isfinite(p.x0) && p.x0 > 0.0, "x0 = " + fmt(p.x0));
    r.add("sigma1 >= 0", std::isfinite(p.sigma1) && p.sigma1 >= 0.0, "sigma1 = " + fmt(p.sigma1));
    r.add("sigma2 >= 0", std::isfinite(p.sigma2) && p.sigma2 >= 0.0, "sigma2 = " + fmt(p.sigma2));
    r.add("a >= 0", p.a >= 0.0, "a = " + fmt(p.a));
    r.add("k finite", std::isfinite(p.k), "k = " + fmt(p.k));
    r.add("H > 1", p.trunc_H > 1.0,
          p.truncated() ? "H = " + fmt(p.trunc_H) : std::string("H unbounded"));
    return r;
}

/// Parameter assumptions plus the grid condition 1 + k dt > 0.
inline ValidationReport validate(const ModelParams& p, const GridSpec& grid) {
    using detail::fmt;
    ValidationReport r = validate(p);
    r.add("T > 0", std::isfinite(grid.T) && grid.T > 0.0, "T = " + fmt(grid.T));
    r.add("n >= 1", grid.n >= 1, "n = " + std::to_string(grid.n));
    const double kdt = 1.0 + p.k * grid.dt();
    r.add("1 + k dt > 0", grid.n >= 1 && kdt > 0.0, "1 + k dt = " + fmt(kdt));
    return r;
}

inline void require_valid(const ValidationReport& report) {
    if (!report.ok()) throw ValidationError(report);
}

/// h(x) = min(|x|^{1/alpha}, H).
inline double jump_coefficient(double x, const ModelParams& p) noexcept {
    const double ax = std::fabs(x);
    if (ax == 0.0) return 0.0;
    return std::fmin(std::pow(ax, 1.0 / p.alpha), p.trunc_H);
}

/// Sufficient conditions under which D stays non-negative for a
/// finite-activity driver (so the |D| repair in the scheme never fires):
///   1 + sigma2 gamma0 dt / alpha > 0  and
///   a - sigma1^2/2 + sigma2 gamma0 (1 - 1/alpha) > 0.
/// Throws std::invalid_argument for the stable driver, whose increments are
/// unbounded below.
inline ValidationReport finite_activity_condition(const ModelParams& p, const DriverSpec& driver,
                                                  const GridSpec& grid) {
    using detail::fmt;
    if (driver.is_stable())
        throw std::invalid_argument(
            "finite_activity_condition: stable drivers have no lower support bound");
    ValidationReport r;
    r.add("intensity > 0", driver.intensity > 0.0, "lambda = " + fmt(driver.intensity));
    const double gamma0 = driver_gamma0(driver, p.alpha);
    const double first = 1.0 + p.sigma2 * gamma0 * grid.dt() / p.alpha;
    const double second = p.effective_drift() + p.sigma2 * gamma0 * (1.0 - 1.0 / p.alpha);
    r.add("1 + sigma2 gamma0 dt / alpha > 0", first > 0.0, "value = " + fmt(first));
    r.add("a - sigma1^2/2 + sigma2 gamma0 (1 - 1/alpha) > 0", second > 0.0,
          "value = " + fmt(second));
    return r;
}

}  // namespace acir
