#pragma once

// Brownian and jump-driver increments on a uniform grid, and their exact
// aggregation onto coarser grids.

#include "acir/model.hpp"
#include "acir/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acir {

/// Sampler for increments of the compensated spectrally positive
/// alpha-stable process Z, whose law is fixed by
///
///   E[exp(-q Z_t)] = exp(t q^alpha / sin(pi (alpha - 1) / 2)),  q >= 0.
///
/// In the Samorodnitsky-Taqqu parametrization a totally right-skewed
/// S_alpha(sigma, 1, 0) variable has E[exp(-qX)] = exp(-sigma^alpha q^alpha /
/// cos(pi alpha / 2)). For alpha in (1, 2), -cos(pi alpha / 2) =
/// sin(pi (alpha - 1) / 2), so Z_t ~ S_alpha(t^{1/alpha}, 1, 0). That law
/// already has mean zero, so no centering shift is needed.
///
/// Draws use the Chambers-Mallows-Stuck transform of a uniform angle V on
/// (-pi/2, pi/2) and a unit exponential W.
class StableSampler {
public:
    explicit StableSampler(double alpha) : alpha_(alpha) {
        if (!(alpha > 1.0 && alpha < 2.0))
            throw std::invalid_argument("StableSampler: alpha must lie in (1, 2)");
        const double tan_term = std::tan(std::numbers::pi * alpha / 2.0);
        // arctan(tan(pi alpha/2)) = pi alpha/2 - pi on (1, 2)
        shift_ = std::atan(tan_term) / alpha;
        scale_ = std::pow(1.0 + tan_term * tan_term, 1.0 / (2.0 * alpha));
        inv_alpha_ = 1.0 / alpha;
        tail_exponent_ = (1.0 - alpha) / alpha;
    }

    double alpha() const noexcept { return alpha_; }

    /// One draw of Z_1.
    template <class URBG>
    double unit(URBG& gen) const {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        double u = 0.0;
        while (u == 0.0) u = uniform(gen);
        double w = 0.0;
        while (w == 0.0) w = -std::log1p(-uniform(gen));
        const double v = std::numbers::pi * (u - 0.5);
        const double shifted = alpha_ * (v + shift_);
        return scale_ * std::sin(shifted) / std::pow(std::cos(v), inv_alpha_) *
               std::pow(std::cos(v - shifted) / w, tail_exponent_);
    }

    /// One draw of Z_{t+dt} - Z_t.
    template <class URBG>
    double increment(URBG& gen, double dt) const {
        return std::pow(dt, inv_alpha_) * unit(gen);
    }

private:
    double alpha_;
    double shift_ = 0.0;
    double scale_ = 1.0;
    double inv_alpha_ = 0.0;
    double tail_exponent_ = 0.0;
};

inline std::vector<double> sample_brownian(const RngStream& stream, long fine_n, double T) {
    if (fine_n < 1 || !(T > 0.0))
        throw std::invalid_argument("sample_brownian: need fine_n >= 1 and T > 0");
    Engine gen = stream.engine(Substream::brownian);
    std::normal_distribution<double> normal(0.0, std::sqrt(T / static_cast<double>(fine_n)));
    std::vector<double> out(static_cast<std::size_t>(fine_n));
    for (auto& x : out) x = normal(gen);
    return out;
}

inline double sample_stable_increment(const RngStream& stream, double dt, double alpha) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_stable_increment: dt must be positive");
    Engine gen = stream.engine(Substream::jump);
    return StableSampler(alpha).increment(gen, dt);
}

/// N - lambda dt with N ~ Poisson(lambda dt).
template <class URBG>
double compensated_poisson_increment(URBG& gen, double dt, double intensity) {
    const double mean = intensity * dt;
    if (!(mean > 0.0)) return 0.0;
    std::poisson_distribution<long> poisson(mean);
    return static_cast<double>(poisson(gen)) - mean;
}

inline double sample_compensated_poisson_increment(const RngStream& stream, double dt,
                                                   double intensity) {
    if (!(dt > 0.0) || !(intensity > 0.0))
        throw std::invalid_argument(
            "sample_compensated_poisson_increment: dt and intensity must be positive");
    Engine gen = stream.engine(Substream::jump);
    return compensated_poisson_increment(gen, dt, intensity);
}

/// Brownian and jump increments of one path on the finest grid.
struct IncrementPanel {
    long fine_n = 0;
    double T = 1.0;
    std::uint64_t seed = 0;
    DriverKind driver = DriverKind::SpectrallyPositiveStable;
    std::vector<double> dW;
    std::vector<double> dZ;

    double dt() const noexcept { return T / static_cast<double>(fine_n); }

    friend bool operator==(const IncrementPanel&, const IncrementPanel&) = default;
};

/// Fills `panel` in place (buffers are reused). The result depends only on
/// (stream, fine_n, T, alpha, driver).
inline void fill_panel(IncrementPanel& panel, const RngStream& stream, long fine_n, double T,
                       double alpha, const DriverSpec& driver) {
    if (fine_n < 1 || !(T > 0.0))
        throw std::invalid_argument("fill_panel: need fine_n >= 1 and T > 0");
    panel.fine_n = fine_n;
    panel.T = T;
    panel.seed = stream.seed;
    panel.driver = driver.kind;
    const auto n = static_cast<std::size_t>(fine_n);
    panel.dW.resize(n);
    panel.dZ.resize(n);
    const double dt = T / static_cast<double>(fine_n);

    Engine wgen = stream.engine(Substream::brownian);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    for (auto& x : panel.dW) x = normal(wgen);

    Engine zgen = stream.engine(Substream::jump);
    if (driver.is_stable()) {
        const StableSampler sampler(alpha);
        const double scale = std::pow(dt, 1.0 / alpha);
        for (auto& z : panel.dZ) z = scale * sampler.unit(zgen);
    } else {
        const double mean = driver.intensity * dt;
        if (!(mean > 0.0)) throw std::invalid_argument("fill_panel: Poisson intensity must be positive");
        std::poisson_distribution<long> poisson(mean);
        for (auto& z : panel.dZ) z = static_cast<double>(poisson(zgen)) - mean;
    }
}

inline IncrementPanel make_panel(const RngStream& stream, long fine_n, double T, double alpha,
                                 const DriverSpec& driver) {
    IncrementPanel panel;
    fill_panel(panel, stream, fine_n, T, alpha, driver);
    return panel;
}

namespace detail {
/// Sum of x[0..len): even lengths split into halves, odd lengths run left to
/// right. A block of 2m values therefore sums to exactly the same double as
/// the sum of its two m-blocks, which makes fine -> 2n -> n aggregation
/// bit-identical to fine -> n.
inline double block_sum(const double* x, std::size_t len) noexcept {
    if (len >= 2 && len % 2 == 0) {
        const std::size_t half = len / 2;
        return block_sum(x, half) + block_sum(x + half, half);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += x[i];
    return sum;
}
}  // namespace detail

/// Block sums of `fine` into `coarse` (coarse.size() must divide fine.size()).
inline void aggregate_into(std::span<const double> fine, std::span<double> coarse) {
    if (coarse.empty() || fine.size() % coarse.size() != 0)
        throw std::invalid_argument("aggregate: coarse size must divide fine size");
    const std::size_t block = fine.size() / coarse.size();
    for (std::size_t i = 0; i < coarse.size(); ++i)
        coarse[i] = detail::block_sum(fine.data() + i * block, block);
}

struct CoarseIncrements {
    std::vector<double> dW;
    std::vector<double> dZ;
};

inline CoarseIncrements aggregate_to_grid(const IncrementPanel& panel, long coarse_n) {
    if (coarse_n < 1 || panel.fine_n % coarse_n != 0)
        throw std::invalid_argument("aggregate_to_grid: " + std::to_string(coarse_n) +
                                    " does not divide " + std::to_string(panel.fine_n));
    CoarseIncrements out{std::vector<double>(static_cast<std::size_t>(coarse_n)),
                         std::vector<double>(static_cast<std::size_t>(coarse_n))};
    aggregate_into(panel.dW, out.dW);
    aggregate_into(panel.dZ, out.dZ);
    return out;
}

// Panel dump layout (all little-endian):
//   char[8] "ACIRPNL1" | u64 fine_n | f64 T | u64 seed | u32 driver tag
//   | f64 dW[fine_n] | f64 dZ[fine_n]
namespace detail {
inline constexpr char panel_magic[8] = {'A', 'C', 'I', 'R', 'P', 'N', 'L', '1'};

template <class U>
void put_le(std::ostream& os, U value) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
        buf[i] = static_cast<unsigned char>(value >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(U)))
        throw std::runtime_error("panel dump: truncated input");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
    return value;
}
}  // namespace detail

inline void write_panel(std::ostream& os, const IncrementPanel& panel) {
    os.write(detail::panel_magic, sizeof detail::panel_magic);
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(panel.fine_n));
    detail::put_le(os, std::bit_cast<std::uint64_t>(panel.T));
    detail::put_le<std::uint64_t>(os, panel.seed);
    detail::put_le<std::uint32_t>(os, panel.driver == DriverKind::SpectrallyPositiveStable ? 0u : 1u);
    for (double x : panel.dW) detail::put_le(os, std::bit_cast<std::uint64_t>(x));
    for (double x : panel.dZ) detail::put_le(os, std::bit_cast<std::uint64_t>(x));
}

inline IncrementPanel read_panel(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, detail::panel_magic, sizeof magic) != 0)
        throw std::runtime_error("panel dump: bad magic");
    IncrementPanel panel;
    const auto n = detail::get_le<std::uint64_t>(is);
    if (n == 0 || n > (std::uint64_t{1} << 40)) throw std::runtime_error("panel dump: bad fine_n");
    panel.fine_n = static_cast<long>(n);
    panel.T = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
    panel.seed = detail::get_le<std::uint64_t>(is);
    const auto tag = detail::get_le<std::uint32_t>(is);
    if (tag > 1) throw std::runtime_error("panel dump: unknown driver tag");
    panel.driver = tag == 0 ? DriverKind::SpectrallyPositiveStable : DriverKind::CompensatedPoisson;
    panel.dW.resize(n);
    panel.dZ.resize(n);
    for (auto& x : panel.dW) x = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
    for (auto& x : panel.dZ) x = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
    return panel;
}

}  // namespace acir
