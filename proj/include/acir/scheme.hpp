#pragma once

// Positivity preserving implicit Euler-Maruyama scheme for the alpha-CIR
// process. With y^2 = X_{i+1}, the drift- and diffusion-implicit step reads
//
//   (1 + k dt) y^2 - sigma1 dW y - D = 0,
//   D = X_i + (a - sigma1^2/2) dt + sigma2 h(X_i) dZ.
//
// D may be negative for infinite-variation drivers, so the scheme solves the
// quadratic with |D| in place of D and takes the unique non-negative root.
// The jump coefficient h is always evaluated at the previous state.

#include "acir/drivers.hpp"
#include "acir/format.hpp"
#include "acir/model.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acir {

struct StepInputs {
    double x_prev = 0.0;
    double dW = 0.0;
    double dZ = 0.0;
    double dt = 0.0;
};

struct StepDiagnostics {
    double discriminant_value = 0.0;  // D before the absolute value
    bool d_negative = false;
};

struct StepResult {
    double x_next = 0.0;
    StepDiagnostics diag;
};

/// Step constants for a fixed (params, dt) pair.
class ImplicitStepper {
public:
    ImplicitStepper(const ModelParams& params, double dt)
        : params_(params),
          dt_(dt),
          denom_(1.0 + params.k * dt),
          drift_dt_(params.effective_drift() * dt) {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::invalid_argument("implicit step: dt must be positive and finite");
        if (!(denom_ > 0.0))
            throw std::invalid_argument("implicit step: requires 1 + k dt > 0, got " +
                                        format_double(denom_));
    }

    double dt() const noexcept { return dt_; }

    /// D = x + (a - sigma1^2/2) dt + sigma2 h(x) dZ.
    double discriminant(double x_prev, double dZ) const noexcept {
        double jump = 0.0;
        if (params_.sigma2 != 0.0 && dZ != 0.0)
            jump = params_.sigma2 * jump_coefficient(x_prev, params_) * dZ;
        return x_prev + drift_dt_ + jump;
    }

    /// Non-negative root y of (1 + k dt) y^2 - b y - c = 0 for c >= 0.
    /// For b < 0 the equivalent form 2c / (s - b) avoids cancellation.
    double root(double b, double c) const noexcept {
        const double s = std::sqrt(b * b + 4.0 * denom_ * c);
        if (b >= 0.0) return (b + s) / (2.0 * denom_);
        const double lower = s - b;
        return lower > 0.0 ? 2.0 * c / lower : 0.0;
    }

    /// No input checks; see implicit_step for the checked entry point.
    StepResult step(double x_prev, double dW, double dZ) const noexcept {
        StepResult r;
        const double d = discriminant(x_prev, dZ);
        r.diag.discriminant_value = d;
        r.diag.d_negative = d < 0.0;
        const double y = root(params_.sigma1 * dW, std::fabs(d));
        r.x_next = y * y;
        return r;
    }

private:
    ModelParams params_;
    double dt_;
    double denom_;
    double drift_dt_;
};

inline StepResult implicit_step(const StepInputs& in, const ModelParams& params) {
    if (!std::isfinite(in.x_prev) || !std::isfinite(in.dW) || !std::isfinite(in.dZ))
        throw std::invalid_argument("implicit_step: non-finite input");
    if (in.x_prev < 0.0) throw std::invalid_argument("implicit_step: x_prev must be non-negative");
    return ImplicitStepper(params, in.dt).step(in.x_prev, in.dW, in.dZ);
}

struct PathRecord {
    GridSpec grid;
    std::vector<double> values;
    long d_negative_count = 0;
    /// Set when a state overflowed to +inf; later values are +inf.
    bool exploded = false;
};

/// Terminal state and event counts, without storing the path.
struct PathSummary {
    double terminal = 0.0;
    long d_negative_count = 0;
    bool exploded = false;
};

inline PathSummary run_to_terminal(const ImplicitStepper& stepper, double x0,
                                   std::span<const double> dW, std::span<const double> dZ) {
    PathSummary s;
    double x = x0;
    for (std::size_t i = 0; i < dW.size(); ++i) {
        const StepResult r = stepper.step(x, dW[i], dZ[i]);
        s.d_negative_count += r.diag.d_negative ? 1 : 0;
        x = r.x_next;
        if (!std::isfinite(x)) {
            s.exploded = true;
            x = std::numeric_limits<double>::infinity();
            break;
        }
    }
    s.terminal = x;
    return s;
}

inline PathRecord simulate_path(const ModelParams& params, const GridSpec& grid,
                                std::span<const double> dW, std::span<const double> dZ) {
    require_valid(validate(params, grid));
    const auto n = static_cast<std::size_t>(grid.n);
    if (dW.size() != n || dZ.size() != n)
        throw std::invalid_argument("simulate_path: increment arrays must have length n");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(dW[i]) || !std::isfinite(dZ[i]))
            throw std::invalid_argument("simulate_path: non-finite increment at step " +
                                        std::to_string(i));

    const ImplicitStepper stepper(params, grid.dt());
    PathRecord rec;
    rec.grid = grid;
    rec.values.assign(n + 1, std::numeric_limits<double>::infinity());
    rec.values[0] = params.x0;
    for (std::size_t i = 0; i < n; ++i) {
        const StepResult r = stepper.step(rec.values[i], dW[i], dZ[i]);
        rec.d_negative_count += r.diag.d_negative ? 1 : 0;
        if (!std::isfinite(r.x_next)) {
            rec.exploded = true;
            break;
        }
        rec.values[i + 1] = r.x_next;
    }
    return rec;
}

/// Simulates every grid in `grids` from the same fine panel, so the records
/// share one realization of (W, Z).
inline std::map<long, PathRecord> simulate_path_all_grids(const ModelParams& params,
                                                          const IncrementPanel& panel,
                                                          std::span<const long> grids) {
    for (long n : grids)
        if (n < 1 || panel.fine_n % n != 0)
            throw std::invalid_argument("simulate_path_all_grids: grid " + std::to_string(n) +
                                        " does not divide fine_n " + std::to_string(panel.fine_n));
    std::map<long, PathRecord> out;
    for (long n : grids) {
        const CoarseIncrements inc = aggregate_to_grid(panel, n);
        out.emplace(n, simulate_path(params, GridSpec{panel.T, n}, inc.dW, inc.dZ));
    }
    return out;
}

/// Writes `# `-prefixed header lines followed by `t,x` rows.
inline void write_path_csv(std::ostream& os, const PathRecord& rec,
                           std::span<const std::string> header) {
    for (const auto& line : header) os << "# " << line << '\n';
    os << "# d_negative_count = " << rec.d_negative_count << '\n';
    os << "# exploded = " << (rec.exploded ? "true" : "false") << '\n';
    os << "t,x\n";
    for (std::size_t i = 0; i < rec.values.size(); ++i)
        os << format_double(rec.grid.time(static_cast<long>(i))) << ','
           << format_double(rec.values[i]) << '\n';
}

}  // namespace acir
