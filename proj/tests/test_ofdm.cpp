#include <random>

#include <gtest/gtest.h>

#include "ifdd/ofdm.hpp"
#include "oracles.hpp"

using namespace ifdd;

namespace {

CVec random_grid(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CVec v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    return v;
}

double max_rel_error(const CVec& a, const CVec& b) {
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        err = std::max(err, std::abs(a[i] - b[i]));
        ref = std::max(ref, std::abs(b[i]));
    }
    return err / ref;
}

OfdmConfig small(std::size_t n, std::size_t cp) {
    OfdmConfig c;
    c.n_sub = n;
    c.cp_samples = cp;
    return c;
}

}  // namespace

TEST(Fft, MatchesDirectDftPowerOfTwo) {
    for (std::size_t n : {4u, 64u, 256u}) {
        auto x = random_grid(n, n);
        auto y = x;
        detail::unitary_dft(y, false);
        EXPECT_LT(max_rel_error(y, oracle::dft(x)), 1e-12) << n;
    }
}

TEST(Fft, MatchesDirectDftOddLength) {
    for (std::size_t n : {3u, 15u, 100u}) {
        auto x = random_grid(n, n);
        auto y = x;
        detail::unitary_dft(y, true);
        EXPECT_LT(max_rel_error(y, oracle::dft(x, true)), 1e-12) << n;
    }
}

TEST(Fft, Parseval) {
    auto x = random_grid(512, 9);
    auto y = x;
    detail::unitary_dft(y, false);
    EXPECT_NEAR(energy(y), energy(x), 1e-9 * energy(x));
}

TEST(Modulate, ZeroGridGivesZeroBlock) {
    const auto cfg = small(64, 8);
    const auto out = modulate(CVec(64), cfg);
    ASSERT_EQ(out.size(), 72u);
    for (const auto& v : out) EXPECT_EQ(v, cplx{});
}

TEST(Modulate, DcToneIsConstant) {
    const auto cfg = small(64, 8);
    CVec grid(64);
    grid[0] = 1.0;
    for (const auto& v : modulate(grid, cfg)) EXPECT_NEAR(std::abs(v - cplx(1.0 / 8.0)), 0.0, 1e-14);
}

TEST(Modulate, CyclicPrefixCopiesTail) {
    const auto cfg = small(64, 16);
    const auto out = modulate(random_grid(64, 1), cfg);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out[i], out[64 + i]);
}

TEST(Modulate, WrongLengthThrows) {
    EXPECT_THROW(modulate(CVec(10), small(64, 8)), ConfigError);
    EXPECT_THROW(demodulate(CVec(64), small(64, 8)), ConfigError);
}

TEST(Modulate, RoundTripIsIdentity) {
    for (std::size_t cp : {0u, 1u, 32u, 127u}) {
        const auto cfg = small(128, cp);
        const auto grid = random_grid(128, cp + 5);
        EXPECT_LT(max_rel_error(demodulate(modulate(grid, cfg), cfg), grid), 1e-10) << cp;
    }
    const OfdmConfig full;
    const auto grid = random_grid(full.n_sub, 77);
    EXPECT_LT(max_rel_error(demodulate(modulate(grid, full), full), grid), 1e-10);
}

TEST(Modulate, UnitToneRecovered) {
    const auto cfg = small(256, 32);
    CVec grid(256);
    grid[17] = 1.0;
    const auto y = demodulate(modulate(grid, cfg), cfg);
    for (std::size_t l = 0; l < 256; ++l) EXPECT_NEAR(std::abs(y[l] - grid[l]), 0.0, 1e-12);
}

// A delay of d samples within the prefix is a phase ramp; d = cp + 1 breaks it.
TEST(Modulate, ShiftTheoremWithinPrefix) {
    const auto cfg = small(128, 16);
    const auto grid = random_grid(128, 3);
    const auto tx = modulate(grid, cfg);
    for (std::size_t d : {1u, 7u, 16u}) {
        CVec rx(tx.size());
        for (std::size_t n = d; n < tx.size(); ++n) rx[n] = tx[n - d];
        const auto y = demodulate(rx, cfg);
        for (std::size_t l = 0; l < 128; ++l) {
            const cplx ramp = std::polar(1.0, -2.0 * oracle::pi * static_cast<double>(l * d) / 128.0);
            EXPECT_NEAR(std::abs(y[l] - grid[l] * ramp), 0.0, 1e-10);
            EXPECT_NEAR(std::abs(y[l]), std::abs(grid[l]), 1e-10);
        }
    }
}

TEST(Modulate, DelayPastPrefixBreaksOrthogonality) {
    const auto cfg = small(128, 16);
    const auto grid = random_grid(128, 4);
    const auto tx = modulate(grid, cfg);
    const std::size_t d = 17;
    CVec rx(tx.size());
    for (std::size_t n = d; n < tx.size(); ++n) rx[n] = tx[n - d];
    const auto y = demodulate(rx, cfg);
    double worst = 0.0;
    for (std::size_t l = 0; l < 128; ++l) {
        const cplx ramp = std::polar(1.0, -2.0 * oracle::pi * static_cast<double>(l * d) / 128.0);
        worst = std::max(worst, std::abs(y[l] - grid[l] * ramp));
    }
    EXPECT_GT(worst, 1e-3);
}

TEST(Demodulate, TimingBackoffIsPhaseRamp) {
    const auto cfg = small(64, 8);
    const auto grid = random_grid(64, 8);
    const auto y = demodulate(modulate(grid, cfg), cfg, 3);
    for (std::size_t l = 0; l < 64; ++l) {
        const cplx ramp = std::polar(1.0, -2.0 * oracle::pi * static_cast<double>(l * 3) / 64.0);
        EXPECT_NEAR(std::abs(y[l] - grid[l] * ramp), 0.0, 1e-12);
    }
    EXPECT_THROW(demodulate(modulate(grid, cfg), cfg, 9), ConfigError);
}

TEST(PulseResponse, KnownValues) {
    const OfdmConfig cfg;
    const double fsub = cfg.subcarrier_spacing_hz();
    EXPECT_NEAR(std::abs(pulse_response(0.0, cfg) - cplx(1.0)), 0.0, 1e-15);
    EXPECT_LT(std::abs(pulse_response(fsub, cfg)), 1e-12);
    EXPECT_LT(std::abs(pulse_response(-3.0 * fsub, cfg)), 1e-12);
    EXPECT_NEAR(std::abs(pulse_response(0.5 * fsub, cfg)), 0.63662, 1e-5);
}

TEST(PulseResponse, MatchesDirectSum) {
    const auto cfg = small(256, 32);
    const double fsub = cfg.subcarrier_spacing_hz();
    for (double x : {0.001, 0.13, 0.5, 1.7, -2.25, 255.5, 256.0}) {
        const cplx g = pulse_response(x * fsub, cfg);
        const cplx ref = oracle::dirichlet(x * fsub, cfg.bandwidth_hz, cfg.n_sub);
        EXPECT_NEAR(std::abs(g - ref), 0.0, 1e-12) << x;
    }
}

TEST(OfdmConfig, DerivedTimes) {
    const OfdmConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.subcarrier_spacing_hz(), 19531.25);
    EXPECT_NEAR(cfg.total_symbol_s(), 57.6e-6, 1e-15);
    EXPECT_EQ(cfg.block_length(), 1152u);
    EXPECT_THROW(small(64, 64).validate(), ConfigError);
    EXPECT_THROW(small(2, 0).validate(), ConfigError);
}
