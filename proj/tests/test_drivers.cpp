#include "acir/drivers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double mean_se = 0.0;
    double var_se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    Moments m;
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m.var = m2 / (n - 1.0);
    m.mean_se = std::sqrt(m.var / n);
    m.var_se = std::sqrt(std::max(0.0, m4 / n - m.var * m.var) / n);
    return m;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

// Critical value of the two-sample KS test at the 1% level.
double ks_critical_1pct(std::size_t n, std::size_t m) {
    return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

std::vector<double> stable_draws(std::uint64_t stream, double alpha, double dt, std::size_t count) {
    acir::Engine gen = acir::RngStream{99, stream}.engine(acir::Substream::jump);
    const acir::StableSampler sampler(alpha);
    std::vector<double> out(count);
    for (auto& x : out) x = sampler.increment(gen, dt);
    return out;
}

}  // namespace

TEST(RngStream, ReplayAndIndependence) {
    const acir::RngStream s{42, 3};
    EXPECT_EQ(s.engine(acir::Substream::brownian)(), s.engine(acir::Substream::brownian)());
    EXPECT_NE(s.engine(acir::Substream::brownian)(), s.engine(acir::Substream::jump)());
    EXPECT_NE(s.engine(acir::Substream::brownian)(),
              (acir::RngStream{42, 4}.engine(acir::Substream::brownian)()));
    EXPECT_NE(s.engine(acir::Substream::brownian)(),
              (acir::RngStream{43, 3}.engine(acir::Substream::brownian)()));
}

TEST(Brownian, SingleStepAndReplay) {
    const auto one = acir::sample_brownian({1, 0}, 1, 1.0);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_TRUE(std::isfinite(one[0]));
    EXPECT_EQ(acir::sample_brownian({5, 9}, 64, 2.0), acir::sample_brownian({5, 9}, 64, 2.0));
    EXPECT_NE(acir::sample_brownian({5, 9}, 64, 2.0), acir::sample_brownian({5, 10}, 64, 2.0));
    EXPECT_THROW(acir::sample_brownian({1, 0}, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(acir::sample_brownian({1, 0}, 4, 0.0), std::invalid_argument);
}

TEST(Brownian, VarianceIsDtWithinThreeStandardErrors) {
    std::vector<double> all;
    all.reserve(1'000'000);
    for (std::uint64_t s = 0; all.size() < 1'000'000; ++s) {
        const auto draws = acir::sample_brownian({11, s}, 4, 1.0);
        all.insert(all.end(), draws.begin(), draws.end());
    }
    const auto m = moments(all);
    EXPECT_LE(std::fabs(m.mean), 3.0 * m.mean_se);
    EXPECT_LE(std::fabs(m.var - 0.25), 3.0 * m.var_se) << "var=" << m.var << " se=" << m.var_se;
}

TEST(StableSampler, RejectsAlphaOutsideOpenInterval) {
    EXPECT_THROW(acir::StableSampler(1.0), std::invalid_argument);
    EXPECT_THROW(acir::StableSampler(2.0), std::invalid_argument);
    EXPECT_THROW(acir::sample_stable_increment({1, 1}, 0.0, 1.5), std::invalid_argument);
}

TEST(StableSampler, CompensatedMeanIsZero) {
    const auto draws = stable_draws(1, 1.9, 1.0, 1'000'000);
    const auto m = moments(draws);
    EXPECT_LE(std::fabs(m.mean), 3.0 * m.mean_se) << "mean=" << m.mean << " se=" << m.mean_se;
}

TEST(StableSampler, LaplaceTransformAtReferencePoint) {
    // exp(0.01 / sin(pi/4)) frozen from the mpmath oracle.
    const double reference = 1.0142426086996436;
    EXPECT_NEAR(std::exp(0.01 / std::sin(std::numbers::pi / 4)), reference, 1e-15);
    const auto draws = stable_draws(2, 1.5, 0.01, 1'000'000);
    std::vector<double> e(draws.size());
    std::transform(draws.begin(), draws.end(), e.begin(), [](double z) { return std::exp(-z); });
    const auto m = moments(e);
    EXPECT_LE(std::fabs(m.mean - reference), 3.0 * m.mean_se)
        << "estimate=" << m.mean << " se=" << m.mean_se;
}

TEST(StableSampler, LaplaceTransformGrid) {
    // q in {0.5, 1, 2}, dt in {1/128, 1/1024}.
    std::uint64_t stream = 100;
    for (double dt : {1.0 / 128, 1.0 / 1024}) {
        for (double q : {0.5, 1.0, 2.0}) {
            const auto draws = stable_draws(stream++, 1.5, dt, 400'000);
            std::vector<double> e(draws.size());
            std::transform(draws.begin(), draws.end(), e.begin(),
                           [q](double z) { return std::exp(-q * z); });
            const auto m = moments(e);
            const double reference =
                std::exp(dt * std::pow(q, 1.5) / std::sin(std::numbers::pi * 0.25));
            EXPECT_LE(std::fabs(m.mean - reference), 3.0 * m.mean_se)
                << "dt=" << dt << " q=" << q << " estimate=" << m.mean << " ref=" << reference;
        }
    }
}

TEST(StableSampler, SelfSimilarityKolmogorovSmirnov) {
    const double alpha = 1.6, dt = 1.0 / 64;
    const auto direct = stable_draws(7, alpha, dt, 100'000);
    auto unit = stable_draws(8, alpha, 1.0, 100'000);
    for (auto& z : unit) z *= std::pow(dt, 1.0 / alpha);
    EXPECT_LT(ks_statistic(direct, unit), ks_critical_1pct(direct.size(), unit.size()));
}

TEST(StableSampler, SumOfFineIncrementsMatchesCoarseLaw) {
    // Closure under convolution: 8 increments over dt/8 sum to one over dt.
    const double alpha = 1.3, dt = 1.0 / 32;
    const auto fine = stable_draws(9, alpha, dt / 8, 800'000);
    std::vector<double> summed(100'000, 0.0);
    for (std::size_t i = 0; i < fine.size(); ++i) summed[i / 8] += fine[i];
    const auto coarse = stable_draws(10, alpha, dt, 100'000);
    EXPECT_LT(ks_statistic(summed, coarse), ks_critical_1pct(summed.size(), coarse.size()));
}

TEST(Poisson, DegenerateAndErrors) {
    acir::Engine gen(1);
    EXPECT_EQ(acir::compensated_poisson_increment(gen, 1e-300, 1e-300), 0.0);
    EXPECT_THROW(acir::sample_compensated_poisson_increment({1, 1}, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(acir::sample_compensated_poisson_increment({1, 1}, 0.1, 0.0), std::invalid_argument);
    const double z = acir::sample_compensated_poisson_increment({1, 1}, 0.5, 2.0);
    EXPECT_DOUBLE_EQ(z + 1.0, std::round(z + 1.0));  // N - 1 with N integer
}

TEST(Poisson, MeanZeroVarianceLambdaDt) {
    acir::Engine gen = acir::RngStream{3, 0}.engine(acir::Substream::jump);
    std::vector<double> draws(1'000'000);
    for (auto& z : draws) z = acir::compensated_poisson_increment(gen, 0.25, 2.0);  // lambda dt = 0.5
    const auto m = moments(draws);
    EXPECT_LE(std::fabs(m.mean), 3.0 * m.mean_se);
    EXPECT_LE(std::fabs(m.var - 0.5), 3.0 * m.var_se) << "var=" << m.var;
    EXPECT_GE(*std::min_element(draws.begin(), draws.end()), -0.5);
}

TEST(Aggregate, IdentityAndPartialSums) {
    acir::IncrementPanel panel;
    panel.fine_n = 4;
    panel.dW = {1, 2, 3, 4};
    panel.dZ = {-1, 0.5, 0.25, 2};
    const auto same = acir::aggregate_to_grid(panel, 4);
    EXPECT_EQ(same.dW, panel.dW);
    EXPECT_EQ(same.dZ, panel.dZ);
    const auto half = acir::aggregate_to_grid(panel, 2);
    EXPECT_EQ(half.dW, (std::vector<double>{3, 7}));
    EXPECT_EQ(half.dZ, (std::vector<double>{-0.5, 2.25}));
    EXPECT_THROW(acir::aggregate_to_grid(panel, 3), std::invalid_argument);
    EXPECT_THROW(acir::aggregate_to_grid(panel, 0), std::invalid_argument);
}

TEST(Aggregate, TotalsAndDivisorChainsOnRandomPanels) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const long fine_n = 96 * (1 + static_cast<long>(s % 3));
        const auto panel = acir::make_panel({s, s}, fine_n, 1.0, 1.4, acir::DriverSpec::stable());
        const double total = std::accumulate(panel.dW.begin(), panel.dW.end(), 0.0);
        for (long n : {1L, 2L, 3L, 6L, 12L, 24L, 48L}) {
            const auto coarse = acir::aggregate_to_grid(panel, n);
            EXPECT_NEAR(std::accumulate(coarse.dW.begin(), coarse.dW.end(), 0.0), total,
                        1e-12 * (1 + std::fabs(total)));
        }
        // fine -> 2n -> n equals fine -> n bit for bit
        for (long n : {3L, 6L, 12L, 24L}) {
            const auto via = acir::aggregate_to_grid(panel, 2 * n);
            acir::IncrementPanel mid;
            mid.fine_n = 2 * n;
            mid.dW = via.dW;
            mid.dZ = via.dZ;
            const auto chained = acir::aggregate_to_grid(mid, n);
            const auto direct = acir::aggregate_to_grid(panel, n);
            EXPECT_EQ(chained.dW, direct.dW);
            EXPECT_EQ(chained.dZ, direct.dZ);
        }
    }
}

TEST(Panel, PureFunctionOfInputs) {
    const auto a = acir::make_panel({8, 2}, 256, 1.0, 1.7, acir::DriverSpec::stable());
    const auto b = acir::make_panel({8, 2}, 256, 1.0, 1.7, acir::DriverSpec::stable());
    EXPECT_EQ(a, b);
    const auto c = acir::make_panel({8, 3}, 256, 1.0, 1.7, acir::DriverSpec::stable());
    EXPECT_NE(a.dZ, c.dZ);
    // changing the jump law leaves the Brownian stream untouched
    const auto d = acir::make_panel({8, 2}, 256, 1.0, 1.7, acir::DriverSpec::poisson(2.0));
    EXPECT_EQ(a.dW, d.dW);
    EXPECT_NE(a.dZ, d.dZ);
}

TEST(Panel, BinaryDumpRoundTripsBitExactly) {
    for (auto driver : {acir::DriverSpec::stable(), acir::DriverSpec::poisson(3.0)}) {
        const auto panel = acir::make_panel({77, 5}, 128, 0.5, 1.2, driver);
        std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
        acir::write_panel(buf, panel);
        EXPECT_EQ(buf.str().size(), 8u + 8 + 8 + 8 + 4 + 2 * 128 * 8);
        EXPECT_EQ(buf.str().substr(8, 8), std::string("\x80\0\0\0\0\0\0\0", 8));  // little-endian 128
        const auto back = acir::read_panel(buf);
        EXPECT_EQ(back, panel);
    }
    std::stringstream bad("NOTAPANEL");
    EXPECT_THROW(acir::read_panel(bad), std::runtime_error);
}
