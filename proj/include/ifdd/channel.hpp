// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_CHANNEL_HPP
#define IFDD_CHANNEL_HPP

#include <memory>
#include <random>
#include <span>

#include "ifdd/core.hpp"
#include "ifdd/fft.hpp"
#include "ifdd/ofdm.hpp"

namespace ifdd {

/// Tapped-delay-line model: n_taps = L + 1 equal-power taps, one sample apart,
/// each with power 1/(L+1), at every one of n_antennas base-station antennas.
struct ChannelModelConfig {
    std::size_t n_taps = 11;
    std::size_t n_antennas = 128;
    double doppler_hz = 0.0;
    double coherence_bw_hz = 120e3;
    double coherence_time_s = 2e-3;
    std::size_t n_scatterers = 32;  // sinusoids per tap in the Jakes process

    std::size_t channel_order() const { return n_taps - 1; }
    double tap_power() const { return 1.0 / static_cast<double>(n_taps); }

    /// Coherence time expressed in whole OFDM symbols of the given numerology.
    std::size_t coherence_symbols(const OfdmConfig& cfg) const {
        return static_cast<std::size_t>(std::floor(coherence_time_s / cfg.total_symbol_s()));
    }

    void validate() const {
        if (n_taps < 1) throw ConfigError("channel.n_taps must be at least 1");
        if (n_antennas < 1) throw ConfigError("channel.n_antennas must be at least 1");
        if (doppler_hz < 0.0) throw ConfigError("channel.doppler_hz must be non-negative");
        if (!(coherence_bw_hz > 0.0)) throw ConfigError("channel.coherence_bw_hz must be positive");
        if (!(coherence_time_s > 0.0)) throw ConfigError("channel.coherence_time_s must be positive");
        if (n_scatterers < 1) throw ConfigError("channel.n_scatterers must be at least 1");
    }
};

/// Maximum Doppler shift for a terminal moving at `speed_kmh`.
inline double doppler_from_speed(double speed_kmh, double carrier_hz) {
    return speed_kmh / 3.6 * carrier_hz / kSpeedOfLight;
}

inline double speed_from_doppler(double doppler_hz, double carrier_hz) {
    return doppler_hz * kSpeedOfLight / carrier_hz * 3.6;
}

/// Channel taps of every antenna at one time instant.
///
/// The Doppler evolution is a sum of sinusoids per tap: each of the
/// n_scatterers paths has a random angle of arrival (Doppler f_D cos a) and a
/// random phase, drawn once at sampling time. That state is immutable and
/// shared between the values produced by evolve(); only the clock and the
/// cached tap values differ.
class ChannelRealization {
public:
    /// Static channel with explicit taps (no Doppler state).
    static ChannelRealization from_taps(std::vector<CVec> taps_per_antenna) {
        ChannelRealization ch;
        ch.n_antennas_ = taps_per_antenna.size();
        ch.n_taps_ = ch.n_antennas_ ? taps_per_antenna.front().size() : 0;
        for (const auto& row : taps_per_antenna) {
            if (row.size() != ch.n_taps_) throw ConfigError("from_taps: ragged tap matrix");
            ch.taps_.insert(ch.taps_.end(), row.begin(), row.end());
        }
        return ch;
    }

    std::size_t n_antennas() const { return n_antennas_; }
    std::size_t n_taps() const { return n_taps_; }
    double time_s() const { return time_s_; }

    std::span<const cplx> taps(std::size_t antenna) const {
        return {taps_.data() + antenna * n_taps_, n_taps_};
    }
    cplx tap(std::size_t antenna, std::size_t l) const { return taps_[antenna * n_taps_ + l]; }

    friend ChannelRealization sample_tdl(const ChannelModelConfig& model, std::uint64_t seed);
    friend ChannelRealization evolve(const ChannelRealization& ch, double dt_s,
                                     const ChannelModelConfig& model);

private:
    struct JakesState {
        std::size_t n_scatterers = 0;
        double amplitude = 0.0;
        std::vector<double> cos_aoa;  // [(k * n_taps + l) * S + s]
        std::vector<double> phase;
    };

    void refresh(double doppler_hz) {
        const auto& st = *jakes_;
        const double w = 2.0 * kPi * doppler_hz * time_s_;
        const std::size_t S = st.n_scatterers;
        for (std::size_t i = 0; i < taps_.size(); ++i) {
            cplx acc{};
            const double* c = st.cos_aoa.data() + i * S;
            const double* p = st.phase.data() + i * S;
            for (std::size_t s = 0; s < S; ++s) {
                const double arg = w * c[s] + p[s];
                acc += cplx(std::cos(arg), std::sin(arg));
            }
            taps_[i] = st.amplitude * acc;
        }
    }

    std::size_t n_antennas_ = 0;
    std::size_t n_taps_ = 0;
    double time_s_ = 0.0;
    std::shared_ptr<const JakesState> jakes_;
    CVec taps_;
};

/// Draws a fresh realization. Deterministic for a fixed seed; antennas and taps
/// are mutually independent.
inline ChannelRealization sample_tdl(const ChannelModelConfig& model, std::uint64_t seed) {
    model.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);

    auto st = std::make_shared<ChannelRealization::JakesState>();
    st->n_scatterers = model.n_scatterers;
    st->amplitude = std::sqrt(model.tap_power() / static_cast<double>(model.n_scatterers));
    const std::size_t total = model.n_antennas * model.n_taps * model.n_scatterers;
    st->cos_aoa.resize(total);
    st->phase.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        st->cos_aoa[i] = std::cos(angle(rng));
        st->phase[i] = angle(rng);
    }

    ChannelRealization ch;
    ch.n_antennas_ = model.n_antennas;
    ch.n_taps_ = model.n_taps;
    ch.taps_.assign(model.n_antennas * model.n_taps, cplx{});
    ch.jakes_ = std::move(st);
    ch.refresh(model.doppler_hz);
    return ch;
}

/// Advances the realization by dt_s seconds along its Jakes trajectory.
inline ChannelRealization evolve(const ChannelRealization& ch, double dt_s,
                                 const ChannelModelConfig& model) {
    if (dt_s < 0.0) throw ConfigError("evolve: dt_s must be non-negative");
    ChannelRealization next = ch;
    next.time_s_ = ch.time_s_ + dt_s;
    if (next.jakes_ && model.doppler_hz != 0.0) next.refresh(model.doppler_hz);
    return next;
}

/// Channel transfer function of every antenna at one subcarrier:
/// H_k(l) = sum_t taps[k][t] e^{-j2pi l t / N}.
inline CVec ctf(const ChannelRealization& ch, std::size_t subcarrier, const OfdmConfig& cfg) {
    if (subcarrier >= cfg.n_sub)
        throw ConfigError("ctf: subcarrier " + std::to_string(subcarrier) + " out of range");
    CVec h(ch.n_antennas());
    const double n = static_cast<double>(cfg.n_sub);
    for (std::size_t k = 0; k < ch.n_antennas(); ++k) {
        cplx acc{};
        for (std::size_t t = 0; t < ch.n_taps(); ++t) {
            const double arg = -2.0 * kPi * static_cast<double>((subcarrier * t) % cfg.n_sub) / n;
            acc += ch.tap(k, t) * cplx(std::cos(arg), std::sin(arg));
        }
        h[k] = acc;
    }
    return h;
}

/// CTF of every antenna on every subcarrier, result[k][l], via one DFT per antenna.
inline std::vector<CVec> ctf_matrix(const ChannelRealization& ch, const OfdmConfig& cfg) {
    if (ch.n_taps() > cfg.n_sub) throw ConfigError("ctf_matrix: more taps than subcarriers");
    const auto& plan = detail::plan_for(cfg.n_sub);
    std::vector<CVec> out(ch.n_antennas(), CVec(cfg.n_sub));
    for (std::size_t k = 0; k < ch.n_antennas(); ++k) {
        auto taps = ch.taps(k);
        std::copy(taps.begin(), taps.end(), out[k].begin());
        plan.transform(out[k], /*inverse=*/false);
    }
    return out;
}

/// Normalised correlation |h1 . h2^H| / (|h1| |h2|).
inline double correlation(std::span<const cplx> h1, std::span<const cplx> h2) {
    if (h1.size() != h2.size() || h1.empty())
        throw DomainError("correlation: vectors must have equal, nonzero length");
    cplx inner{};
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
        inner += h1[i] * std::conj(h2[i]);
        n1 += std::norm(h1[i]);
        n2 += std::norm(h2[i]);
    }
    if (n1 == 0.0 || n2 == 0.0) throw DomainError("correlation: zero-norm vector");
    return std::min(1.0, std::abs(inner) / std::sqrt(n1 * n2));
}

/// Ensemble frequency correlation of the uniform power-delay profile at a
/// subcarrier distance delta: (1/(L+1)) |sin(pi (L+1) delta/N) / sin(pi delta/N)|.
inline double uniform_profile_correlation(std::size_t n_taps, std::size_t n_sub, double delta = 1.0) {
    const double x = kPi * delta / static_cast<double>(n_sub);
    if (std::abs(std::sin(x)) < 1e-15) return 1.0;
    return std::abs(std::sin(static_cast<double>(n_taps) * x) / std::sin(x)) / static_cast<double>(n_taps);
}

struct CoherenceVerdict {
    bool feasible = false;
    double time_margin_s = 0.0;       // T_c/2 - N/B
    double bandwidth_margin_s = 0.0;  // N/B - k/B_c, k = 3 (IFDD) or 1 (TDD)
};

/// Reciprocity feasibility: T_c/2 >= N/B >= 3/B_c for IFDD, 1/B_c for TDD.
inline CoherenceVerdict coherence_check(const OfdmConfig& cfg, const ChannelModelConfig& model,
                                        Duplex mode) {
    const double useful = cfg.useful_symbol_s();
    const double k = mode == Duplex::ifdd ? 3.0 : 1.0;
    CoherenceVerdict v;
    v.time_margin_s = model.coherence_time_s / 2.0 - useful;
    v.bandwidth_margin_s = useful - k / model.coherence_bw_hz;
    v.feasible = v.time_margin_s >= 0.0 && v.bandwidth_margin_s >= 0.0;
    return v;
}

}  // namespace ifdd

#endif  // IFDD_CHANNEL_HPP
