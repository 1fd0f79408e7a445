// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_IMPAIRMENTS_HPP
#define IFDD_IMPAIRMENTS_HPP

#include <algorithm>
#include <array>
#include <limits>
#include <span>

#include "ifdd/core.hpp"
#include "ifdd/ofdm.hpp"

namespace ifdd {

/// One self-interference path at the UE: power ratio rho and reflection delay.
struct LeakagePath {
    double rho = 0.0;
    double delay_s = 0.0;
};

struct ImpairmentConfig {
    double cfo_hz = 0.0;
    std::array<LeakagePath, 4> leakage{};  // coupler, antenna, load, local scatterer
    int adc_bits = 8;
    bool adc_enabled = false;
    double tx_power_w = 1.0;  // reference single-antenna P_tx / P_rx
    double rx_power_w = 1e-6;
    double eps1 = 1.5;
    double eps2 = 0.5;
    bool power_scaling = true;  // apply the massive-MIMO exponents in frame runs

    /// Worst case: all paths add up constructively.
    double total_leakage() const {
        double rho = 0.0;
        for (const auto& p : leakage) rho += p.rho;
        return rho;
    }
    double power_gap() const { return tx_power_w / rx_power_w; }
    double adc_levels() const { return std::ldexp(1.0, adc_bits); }

    void validate() const {
        for (std::size_t i = 0; i < leakage.size(); ++i) {
            if (leakage[i].rho < 0.0)
                throw ConfigError("impairments.rho" + std::to_string(i + 1) + " must be non-negative");
            if (leakage[i].delay_s < 0.0)
                throw ConfigError("impairments.delay" + std::to_string(i + 1) + "_s must be non-negative");
        }
        if (adc_bits < 1 || adc_bits > 30) throw ConfigError("impairments.adc_bits must be in [1, 30]");
        if (!(rx_power_w > 0.0)) throw ConfigError("impairments.rx_power_w must be positive");
        if (!(tx_power_w > 0.0)) throw ConfigError("impairments.tx_power_w must be positive");
    }
};

/// Multiplies sample n by e^{j2pi f_off (t0 + n/B)}.
inline CVec apply_cfo(std::span<const cplx> samples, double f_off_hz, double t0_s, const OfdmConfig& cfg) {
    CVec out(samples.begin(), samples.end());
    if (f_off_hz == 0.0) return out;
    const double ts = cfg.sample_period_s();
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double arg = 2.0 * kPi * f_off_hz * (t0_s + static_cast<double>(n) * ts);
        out[n] *= cplx(std::cos(arg), std::sin(arg));
    }
    return out;
}

/// Phase of the desired term after apply_cfo(t0 = 0) and demodulate(): the
/// window starts cp samples in, and G(f_off) adds its own linear phase.
inline cplx cfo_common_phase(double f_off_hz, const OfdmConfig& cfg) {
    const cplx g = pulse_response(f_off_hz, cfg);
    const double window = 2.0 * kPi * f_off_hz * cfg.cp_duration_s();
    const double mag = std::abs(g);
    const cplx gdir = mag > 0.0 ? g / mag : cplx(1.0, 0.0);
    return std::polar(1.0, window) * gdir;
}

enum class DelayPolicy { reject, allow_violation };

inline std::size_t delay_samples(double delay_s, const OfdmConfig& cfg) {
    return static_cast<std::size_t>(std::llround(delay_s * cfg.bandwidth_hz));
}

/// Rejects any reflection longer than the cyclic prefix.
inline void check_leakage_delays(const ImpairmentConfig& imp, const OfdmConfig& cfg) {
    for (std::size_t i = 0; i < imp.leakage.size(); ++i) {
        const std::size_t d = delay_samples(imp.leakage[i].delay_s, cfg);
        if (d > cfg.cp_samples)
            throw OrthogonalityError("impairments.delay" + std::to_string(i + 1) + "_s: " + std::to_string(d) +
                                     " samples exceeds cyclic prefix of " + std::to_string(cfg.cp_samples));
    }
}

/// Self-interference seen by the UE receiver: sum_i sqrt(rho_i) x_UL[n - d_i],
/// d_i = round(tau_i B), zero before the block starts.
inline CVec loopback(std::span<const cplx> ul_tx, const ImpairmentConfig& imp, const OfdmConfig& cfg,
                     DelayPolicy policy = DelayPolicy::reject) {
    if (policy == DelayPolicy::reject) check_leakage_delays(imp, cfg);
    CVec out(ul_tx.size(), cplx{});
    for (const auto& path : imp.leakage) {
        const std::size_t d = delay_samples(path.delay_s, cfg);
        if (path.rho == 0.0) continue;
        const double a = std::sqrt(path.rho);
        for (std::size_t n = d; n < out.size(); ++n) out[n] += a * ul_tx[n - d];
    }
    return out;
}

inline double quantize_component(double x, double step, double top) {
    const double q = step * (std::floor(x / step) + 0.5);
    return std::clamp(q, -top, top);
}

/// Uniform mid-rise quantiser, 2^bits levels over [-full_scale, full_scale],
/// applied to I and Q separately. Out-of-range values saturate.
inline CVec quantize(std::span<const cplx> samples, int adc_bits, double full_scale) {
    if (!(full_scale > 0.0)) throw ConfigError("quantize: full_scale must be positive");
    if (adc_bits < 1 || adc_bits > 30) throw ConfigError("quantize: adc_bits must be in [1, 30]");
    const double step = 2.0 * full_scale / std::ldexp(1.0, adc_bits);
    const double top = full_scale - step / 2.0;
    CVec out(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n)
        out[n] = {quantize_component(samples[n].real(), step, top),
                  quantize_component(samples[n].imag(), step, top)};
    return out;
}

/// AGC: full scale at the strongest I/Q component of the superimposed signal.
inline double agc_full_scale(std::span<const cplx> samples) {
    double peak = 0.0;
    for (const auto& x : samples) peak = std::max({peak, std::abs(x.real()), std::abs(x.imag())});
    return peak > 0.0 ? peak : 1.0;
}

/// gamma_Q = 1.5 N^2 / (1 + rho P_tx / P_rx), N = 2^bits.
inline double sqnr_analytic(const ImpairmentConfig& imp) {
    const double n = imp.adc_levels();
    return 1.5 * n * n / (1.0 + imp.total_leakage() * imp.power_gap());
}

enum class Stage { uplink_pilot_data, downlink_data };

/// Exponent of M dividing the leakage term at the given transmission stage.
inline double stage_exponent(const ImpairmentConfig& imp, Stage stage) {
    return stage == Stage::uplink_pilot_data ? imp.eps1 - imp.eps2 : 2.0 - imp.eps1 + imp.eps2;
}

inline double sqnr_massive(const ImpairmentConfig& imp, std::size_t n_antennas, Stage stage) {
    if (n_antennas < 1) throw ConfigError("sqnr_massive: n_antennas must be at least 1");
    const double n = imp.adc_levels();
    const double scale = std::pow(static_cast<double>(n_antennas), stage_exponent(imp, stage));
    return 1.5 * n * n / (1.0 + imp.total_leakage() / scale * imp.power_gap());
}

/// Ratio of signal energy to error energy between a reference and its distorted copy.
inline double measured_sqnr(std::span<const cplx> reference, std::span<const cplx> distorted) {
    if (reference.size() != distorted.size()) throw ConfigError("measured_sqnr: length mismatch");
    double s = 0.0, e = 0.0;
    for (std::size_t n = 0; n < reference.size(); ++n) {
        s += std::norm(reference[n]);
        e += std::norm(distorted[n] - reference[n]);
    }
    return e > 0.0 ? s / e : std::numeric_limits<double>::infinity();
}

/// Average SIR on subcarrier l under CFO, summing interference from every
/// subcarrier listed in `interferers` except l itself.
inline double sir_analytic(double f_off_hz, std::size_t subcarrier, const OfdmConfig& cfg,
                           std::span<const std::size_t> interferers) {
    if (subcarrier >= cfg.n_sub) throw ConfigError("sir_analytic: subcarrier out of range");
    if (f_off_hz == 0.0) return std::numeric_limits<double>::infinity();
    const double fsub = cfg.subcarrier_spacing_hz();
    const double desired = std::norm(pulse_response(f_off_hz, cfg));
    double interference = 0.0;
    for (std::size_t n : interferers) {
        if (n == subcarrier) continue;
        const double shift = (static_cast<double>(n) - static_cast<double>(subcarrier)) * fsub;
        interference += std::norm(pulse_response(shift + f_off_hz, cfg));
    }
    if (interference == 0.0) return std::numeric_limits<double>::infinity();
    return desired / interference;
}

/// Same, over all n_sub - 1 other subcarriers.
inline double sir_analytic(double f_off_hz, std::size_t subcarrier, const OfdmConfig& cfg) {
    std::vector<std::size_t> all(cfg.n_sub);
    for (std::size_t n = 0; n < cfg.n_sub; ++n) all[n] = n;
    return sir_analytic(f_off_hz, subcarrier, cfg, all);
}

}  // namespace ifdd

#endif  // IFDD_IMPAIRMENTS_HPP
