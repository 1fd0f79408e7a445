// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_OFDM_HPP
#define IFDD_OFDM_HPP

#include <span>
#include <string>

#include "ifdd/core.hpp"
#include "ifdd/fft.hpp"

namespace ifdd {

/// OFDM numerology. Subcarrier indices are 0-based; the DFT is unitary in both
/// directions so time-domain and subcarrier-domain energies agree.
struct OfdmConfig {
    double bandwidth_hz = 20e6;
    std::size_t n_sub = 1024;
    std::size_t cp_samples = 128;
    double carrier_hz = 2.1e9;

    double subcarrier_spacing_hz() const { return bandwidth_hz / static_cast<double>(n_sub); }
    double sample_period_s() const { return 1.0 / bandwidth_hz; }
    double useful_symbol_s() const { return static_cast<double>(n_sub) / bandwidth_hz; }
    double cp_duration_s() const { return static_cast<double>(cp_samples) / bandwidth_hz; }
    double total_symbol_s() const { return static_cast<double>(n_sub + cp_samples) / bandwidth_hz; }
    std::size_t block_length() const { return n_sub + cp_samples; }

    void validate() const {
        if (!(bandwidth_hz > 0.0)) throw ConfigError("ofdm.bandwidth_hz must be positive");
        if (n_sub < 3) throw ConfigError("ofdm.n_sub must be at least 3");
        if (cp_samples >= n_sub) throw ConfigError("ofdm.cp_samples must be smaller than n_sub");
    }
};

/// Inverse DFT of one symbol row with the cyclic prefix prepended.
inline CVec modulate(std::span<const cplx> grid, const OfdmConfig& cfg) {
    if (grid.size() != cfg.n_sub)
        throw ConfigError("modulate: grid length " + std::to_string(grid.size()) + " != n_sub " +
                          std::to_string(cfg.n_sub));
    CVec core(grid.begin(), grid.end());
    detail::unitary_dft(core, /*inverse=*/true);
    CVec out;
    out.reserve(cfg.block_length());
    out.insert(out.end(), core.end() - static_cast<std::ptrdiff_t>(cfg.cp_samples), core.end());
    out.insert(out.end(), core.begin(), core.end());
    return out;
}

/// Drops the cyclic prefix and applies the forward DFT.
///
/// `timing_backoff` moves the DFT window that many samples earlier, into the
/// prefix. A backoff of b turns into a phase ramp e^{-j2pi l b/N} on every
/// subcarrier; the default places the window right after the prefix.
inline CVec demodulate(std::span<const cplx> samples, const OfdmConfig& cfg,
                       std::size_t timing_backoff = 0) {
    if (samples.size() != cfg.block_length())
        throw ConfigError("demodulate: block length " + std::to_string(samples.size()) +
                          " != n_sub + cp " + std::to_string(cfg.block_length()));
    if (timing_backoff > cfg.cp_samples) throw ConfigError("demodulate: timing backoff exceeds cp");
    const auto start = static_cast<std::ptrdiff_t>(cfg.cp_samples - timing_backoff);
    CVec core(samples.begin() + start, samples.begin() + start + static_cast<std::ptrdiff_t>(cfg.n_sub));
    detail::unitary_dft(core, /*inverse=*/false);
    return core;
}

/// Subcarrier response of the rectangular observation window (Dirichlet kernel):
/// G(f) = (1/N) sum_{n<N} e^{j2pi f n / B}. G(0) = 1, nulls at nonzero multiples of
/// the subcarrier spacing.
inline cplx pulse_response(double f_hz, const OfdmConfig& cfg) {
    const double n = static_cast<double>(cfg.n_sub);
    const double x = f_hz / cfg.bandwidth_hz;  // cycles per sample
    const double s = std::sin(kPi * x);
    const cplx phase = std::polar(1.0, kPi * x * (n - 1.0));
    if (std::abs(s) < 1e-12) {
        // x at an integer: every term equals e^{j2pi x n} = 1 up to rounding
        return phase * (std::cos(kPi * x * n) / std::cos(kPi * x));
    }
    return phase * (std::sin(kPi * x * n) / (n * s));
}

}  // namespace ifdd

#endif  // IFDD_OFDM_HPP
