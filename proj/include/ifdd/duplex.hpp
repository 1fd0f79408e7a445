// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_DUPLEX_HPP
#define IFDD_DUPLEX_HPP

#include <optional>
#include <random>
#include <span>
#include <string>

#include "ifdd/channel.hpp"
#include "ifdd/core.hpp"
#include "ifdd/impairments.hpp"
#include "ifdd/ofdm.hpp"

namespace ifdd {

// ---------------------------------------------------------------- allocation

/// Interlaced [D, U, D] groups. Group g occupies 3g, 3g+1, 3g+2 with the middle
/// one uplink; the top n_sub mod 3 subcarriers stay empty.
struct SubcarrierAllocation {
    std::size_t n_sub = 0;
    std::vector<std::size_t> uplink;
    std::vector<std::size_t> downlink;

    /// The two downlink dependents of uplink subcarrier u.
    std::array<std::size_t, 2> adjacent(std::size_t u) const { return {u - 1, u + 1}; }
    /// The uplink subcarrier whose estimate precodes downlink subcarrier d.
    std::size_t source_of(std::size_t d) const { return d % 3 == 0 ? d + 1 : d - 1; }
};

inline SubcarrierAllocation make_allocation(std::size_t n_sub) {
    if (n_sub < 3) throw ConfigError("make_allocation: n_sub must be at least 3, got " + std::to_string(n_sub));
    SubcarrierAllocation a;
    a.n_sub = n_sub;
    const std::size_t groups = n_sub / 3;
    a.uplink.reserve(groups);
    a.downlink.reserve(2 * groups);
    for (std::size_t g = 0; g < groups; ++g) {
        a.downlink.push_back(3 * g);
        a.uplink.push_back(3 * g + 1);
        a.downlink.push_back(3 * g + 2);
    }
    return a;
}

/// Downlink subcarrier -> subcarrier whose estimate is used for its precoder.
struct PrecodingPlan {
    std::vector<std::size_t> downlink;
    std::vector<std::size_t> source;
};

inline PrecodingPlan interlaced_plan(const SubcarrierAllocation& a) {
    PrecodingPlan p;
    p.downlink = a.downlink;
    p.source.reserve(a.downlink.size());
    for (std::size_t d : a.downlink) p.source.push_back(a.source_of(d));
    return p;
}

/// TDD: full band, each subcarrier precoded from its own estimate.
inline PrecodingPlan identity_plan(std::size_t n_sub) {
    PrecodingPlan p;
    p.downlink.resize(n_sub);
    for (std::size_t l = 0; l < n_sub; ++l) p.downlink[l] = l;
    p.source = p.downlink;
    return p;
}

// ------------------------------------------------------------ estimation

struct ChannelEstimate {
    std::size_t n_sub = 0;
    std::vector<std::size_t> subcarriers;
    std::vector<CVec> vectors;  // one length-M vector per entry of `subcarriers`
    std::uint64_t symbol_index = 0;
    double time_s = 0.0;

    const CVec* find(std::size_t subcarrier) const {
        if (subcarrier >= index_.size() || index_[subcarrier] < 0) return nullptr;
        return &vectors[static_cast<std::size_t>(index_[subcarrier])];
    }

    void build_index() {
        index_.assign(n_sub, -1);
        for (std::size_t i = 0; i < subcarriers.size(); ++i) index_[subcarriers[i]] = static_cast<long>(i);
    }

private:
    std::vector<long> index_;
};

/// Least-squares estimate h(u) = Y(u) / S_p(u) at every antenna.
/// `rx` holds one demodulated grid per antenna; `pilots` is a full-length grid.
inline ChannelEstimate estimate_channel(const std::vector<CVec>& rx, std::span<const cplx> pilots,
                                        std::span<const std::size_t> subcarriers) {
    if (rx.empty()) throw ConfigError("estimate_channel: no antennas");
    ChannelEstimate est;
    est.n_sub = pilots.size();
    est.subcarriers.assign(subcarriers.begin(), subcarriers.end());
    est.vectors.reserve(subcarriers.size());
    for (std::size_t u : subcarriers) {
        if (u >= pilots.size()) throw ConfigError("estimate_channel: subcarrier out of range");
        const cplx s = pilots[u];
        if (s == cplx{}) throw DomainError("estimate_channel: zero pilot on subcarrier " + std::to_string(u));
        CVec h(rx.size());
        for (std::size_t k = 0; k < rx.size(); ++k) {
            if (rx[k].size() != pilots.size()) throw ConfigError("estimate_channel: grid length mismatch");
            h[k] = rx[k][u] / s;
        }
        est.vectors.push_back(std::move(h));
    }
    est.build_index();
    return est;
}

// ------------------------------------------------------------- precoding

struct PrecodedGrid {
    std::vector<CVec> antennas;           // [k][l]
    std::vector<std::size_t> skipped;     // downlink subcarriers left silent
};

/// Antenna k sends beta conj(h_k(u)) X(d) on d, beta = sqrt(P) / |h(u)|.
inline PrecodedGrid mr_precode(const ChannelEstimate& est, std::span<const cplx> dl_symbols,
                               const PrecodingPlan& plan, double power_per_subcarrier) {
    if (dl_symbols.size() != plan.downlink.size())
        throw ConfigError("mr_precode: one symbol per downlink subcarrier expected");
    if (est.vectors.empty()) throw ConfigError("mr_precode: empty estimate");
    const std::size_t m = est.vectors.front().size();
    PrecodedGrid out;
    out.antennas.assign(m, CVec(est.n_sub, cplx{}));
    const double amp = std::sqrt(power_per_subcarrier);
    for (std::size_t i = 0; i < plan.downlink.size(); ++i) {
        const CVec* h = est.find(plan.source[i]);
        if (!h) throw ConfigError("mr_precode: no estimate for subcarrier " + std::to_string(plan.source[i]));
        double norm2 = 0.0;
        for (const auto& x : *h) norm2 += std::norm(x);
        if (norm2 == 0.0) {
            out.skipped.push_back(plan.downlink[i]);
            continue;
        }
        const cplx scaled = amp / std::sqrt(norm2) * dl_symbols[i];
        for (std::size_t k = 0; k < m; ++k) out.antennas[k][plan.downlink[i]] = std::conj((*h)[k]) * scaled;
    }
    return out;
}

// ------------------------------------------------------------------ QPSK

inline cplx qpsk_map(std::uint8_t b0, std::uint8_t b1) {
    const double a = 1.0 / std::sqrt(2.0);
    return {a * (1.0 - 2.0 * b0), a * (1.0 - 2.0 * b1)};
}

inline std::array<std::uint8_t, 2> qpsk_decide(cplx y) {
    return {static_cast<std::uint8_t>(y.real() < 0.0), static_cast<std::uint8_t>(y.imag() < 0.0)};
}

// ----------------------------------------------------------------- frames

struct FrameConfig {
    Duplex mode = Duplex::tdd;
    double pilot_rate = 1.0 / 3.0;
    double transient_s = 1e-6;          // tau_ST, TDD only
    std::size_t ifdd_pilot_period = 1;  // IFDD symbols between UE pilots

    /// 1/p; throws unless it is a positive integer.
    std::size_t symbols_per_ul() const {
        if (!(pilot_rate > 0.0) || pilot_rate > 1.0) throw ConfigError("frame.pilot_rate must be in (0, 1]");
        const double inv = 1.0 / pilot_rate;
        const double r = std::round(inv);
        if (std::abs(inv - r) > 1e-9 * r)
            throw ConfigError("frame.pilot_rate: 1/p = " + std::to_string(inv) + " is not an integer");
        return static_cast<std::size_t>(r);
    }

    void validate() const {
        (void)symbols_per_ul();
        if (transient_s < 0.0) throw ConfigError("frame.transient_s must be non-negative");
        if (ifdd_pilot_period < 1) throw ConfigError("frame.ifdd_pilot_period must be at least 1");
    }
};

/// Accepts "1/3", "0.5", "1".
inline double parse_pilot_rate(const std::string& text) {
    const auto number = [&](const std::string& part) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size())
            throw ConfigError("pilot rate '" + text + "' is not a number or fraction");
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return number(text);
    const double den = number(text.substr(slash + 1));
    if (den == 0.0) throw ConfigError("pilot rate '" + text + "' has zero denominator");
    return number(text.substr(0, slash)) / den;
}

/// T_TDD = 2T/p + T/p + 2 tau; T_IFDD = 2T/p + 2T, T being the TDD symbol.
inline double frame_duration(const FrameConfig& fc, double symbol_s) {
    const double n = static_cast<double>(fc.symbols_per_ul());
    if (fc.mode == Duplex::tdd) return 2.0 * symbol_s * n + symbol_s * n + 2.0 * fc.transient_s;
    return 2.0 * symbol_s * n + 2.0 * symbol_s;
}

struct FrameResult {
    Duplex mode = Duplex::tdd;
    std::size_t symbols_per_ul = 0;
    bool warmup = false;  // ran without CSI; excluded from statistics
    std::vector<std::uint8_t> tx_bits;
    std::vector<std::uint8_t> decided_bits;
    std::vector<double> staleness_s;      // per DL symbol
    std::vector<double> estimate_time_s;  // per DL symbol
    std::vector<double> subcarrier_snr;   // per DL subcarrier, mean over DL symbols
    std::size_t dl_resource_elements = 0;
    std::size_t skipped_precoders = 0;
    double frame_duration_s = 0.0;
    double max_power_error = 0.0;  // largest |sum_k |X_k(d)|^2 - P| seen
    bool coherence_warning = false;
    double sinr_signal = 0.0;
    double sinr_error = 0.0;

    /// Demodulated DL SINR against the noise-free, impairment-free reference.
    double measured_sinr_db() const {
        if (sinr_error == 0.0) return std::numeric_limits<double>::infinity();
        return linear_to_db(sinr_signal / sinr_error);
    }
};

struct LinkConfig {
    OfdmConfig tdd_ofdm{};
    OfdmConfig ifdd_ofdm{20e6, 2048, 256, 2.1e9};
    ChannelModelConfig channel{};
    ImpairmentConfig impairments{};
    FrameConfig frame{};
    double snr_db = 3.0;         // DL working point per subcarrier, perfect CSI
    double pilot_snr_db = 20.0;  // per-antenna UL pilot SNR at the BS
    double dl_power = 1.0;       // radiated power per DL subcarrier

    const OfdmConfig& ofdm() const { return frame.mode == Duplex::tdd ? tdd_ofdm : ifdd_ofdm; }

    void validate() const {
        tdd_ofdm.validate();
        ifdd_ofdm.validate();
        channel.validate();
        impairments.validate();
        frame.validate();
        if (channel.n_taps > ofdm().cp_samples + 1)
            throw ConfigError("channel.n_taps exceeds cyclic prefix + 1 of the " +
                              std::string(to_string(frame.mode)) + " numerology");
        if (!(dl_power > 0.0)) throw ConfigError("link.dl_power must be positive");
    }
};

struct LinkSeeds {
    std::uint64_t channel = 1;
    std::uint64_t noise = 2;
    std::uint64_t pilot = 3;
};

/// Everything a run of consecutive frames carries from one frame to the next.
struct LinkState {
    LinkConfig cfg;
    ChannelRealization channel;  // reference realization at t = 0
    double clock_s = 0.0;
    std::optional<ChannelEstimate> estimate;
    std::uint64_t symbol_counter = 0;
    CVec pilots;  // full-length grid of the active numerology
    SubcarrierAllocation allocation;
    std::mt19937_64 rng;
};

inline LinkState make_link_state(const LinkConfig& cfg, const LinkSeeds& seeds) {
    cfg.validate();
    LinkState s;
    s.cfg = cfg;
    s.channel = sample_tdl(cfg.channel, seeds.channel);
    s.rng.seed(seeds.noise);
    const auto& ofdm = cfg.ofdm();
    s.allocation = make_allocation(ofdm.n_sub);
    std::mt19937_64 prng(seeds.pilot);
    std::uniform_int_distribution<int> bit(0, 1);
    s.pilots.resize(ofdm.n_sub);
    for (auto& p : s.pilots) {
        const auto b0 = static_cast<std::uint8_t>(bit(prng));
        const auto b1 = static_cast<std::uint8_t>(bit(prng));
        p = qpsk_map(b0, b1);
    }
    return s;
}

namespace detail {

inline cplx complex_normal(std::mt19937_64& rng, double variance) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

inline ChannelRealization channel_at(const LinkState& s, double t) {
    return evolve(s.channel, t - s.channel.time_s(), s.cfg.channel);
}

/// BS-side pilot reception at time t on `subcarriers`, LS estimate.
inline ChannelEstimate pilot_estimate(LinkState& s, double t, std::span<const std::size_t> subcarriers) {
    const auto& ofdm = s.cfg.ofdm();
    const auto h = ctf_matrix(channel_at(s, t), ofdm);
    const double noise_var = 1.0 / db_to_linear(s.cfg.pilot_snr_db);
    std::vector<CVec> rx(h.size(), CVec(ofdm.n_sub, cplx{}));
    for (std::size_t k = 0; k < h.size(); ++k)
        for (std::size_t u : subcarriers) rx[k][u] = h[k][u] * s.pilots[u] + complex_normal(s.rng, noise_var);
    auto est = estimate_channel(rx, s.pilots, subcarriers);
    est.time_s = t;
    est.symbol_index = s.symbol_counter;
    return est;
}

/// One DL symbol at centre time t through the UE receive chain. `ul_grid`
/// is the UE's simultaneous uplink (IFDD) or empty (TDD).
inline void downlink_symbol(LinkState& s, double t, const PrecodingPlan& plan, std::span<const cplx> ul_grid,
                            FrameResult& r) {
    const auto& cfg = s.cfg;
    const auto& ofdm = cfg.ofdm();
    const auto& imp = cfg.impairments;
    const std::size_t m = cfg.channel.n_antennas;
    const auto& est = *s.estimate;

    std::uniform_int_distribution<int> bit(0, 1);
    CVec x(plan.downlink.size());
    for (auto& v : x) {
        const auto b0 = static_cast<std::uint8_t>(bit(s.rng));
        const auto b1 = static_cast<std::uint8_t>(bit(s.rng));
        r.tx_bits.push_back(b0);
        r.tx_bits.push_back(b1);
        v = qpsk_map(b0, b1);
    }

    const auto pre = mr_precode(est, x, plan, cfg.dl_power);
    r.skipped_precoders += pre.skipped.size();
    const auto h = ctf_matrix(channel_at(s, t), ofdm);

    const double noise_var = static_cast<double>(m) * cfg.dl_power / db_to_linear(cfg.snr_db);
    CVec clean(ofdm.n_sub, cplx{});
    if (r.subcarrier_snr.empty()) r.subcarrier_snr.assign(plan.downlink.size(), 0.0);
    for (std::size_t i = 0; i < plan.downlink.size(); ++i) {
        const std::size_t d = plan.downlink[i];
        cplx acc{};
        double tx_power = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            acc += h[k][d] * pre.antennas[k][d];
            tx_power += std::norm(pre.antennas[k][d]);
        }
        clean[d] = acc;
        r.max_power_error = std::max(r.max_power_error, std::abs(tx_power - cfg.dl_power * std::norm(x[i])));
        r.subcarrier_snr[i] += std::norm(acc / x[i]) / noise_var;
    }

    CVec rx = apply_cfo(modulate(clean, ofdm), imp.cfo_hz, 0.0, ofdm);
    if (!ul_grid.empty() && imp.total_leakage() > 0.0) {
        // UE transmit level relative to the DL it receives, after massive-MIMO power scaling
        double gap = imp.power_gap();
        if (imp.power_scaling) gap /= std::pow(static_cast<double>(m), stage_exponent(imp, Stage::downlink_data));
        double ul_power = 0.0;
        for (const auto& u : ul_grid) ul_power += std::norm(u);
        const double rx_power = static_cast<double>(m) * cfg.dl_power * static_cast<double>(plan.downlink.size());
        const double amp = std::sqrt(gap * rx_power / ul_power);
        CVec ul_tx = modulate(ul_grid, ofdm);
        for (auto& v : ul_tx) v *= amp;
        const auto leak = loopback(ul_tx, imp, ofdm);
        for (std::size_t n = 0; n < rx.size(); ++n) rx[n] += leak[n];
    }
    for (auto& v : rx) v += complex_normal(s.rng, noise_var);
    if (imp.adc_enabled) rx = quantize(rx, imp.adc_bits, agc_full_scale(rx));
    CVec y = demodulate(rx, ofdm);
    if (imp.cfo_hz != 0.0) {
        const cplx derot = std::conj(cfo_common_phase(imp.cfo_hz, ofdm));
        for (auto& v : y) v *= derot;
    }

    for (std::size_t i = 0; i < plan.downlink.size(); ++i) {
        const std::size_t d = plan.downlink[i];
        const auto b = qpsk_decide(y[d]);
        r.decided_bits.push_back(b[0]);
        r.decided_bits.push_back(b[1]);
        r.sinr_signal += std::norm(clean[d]);
        r.sinr_error += std::norm(y[d] - clean[d]);
    }
    r.staleness_s.push_back(t - est.time_s);
    r.estimate_time_s.push_back(est.time_s);
}

inline void finish_snr(FrameResult& r) {
    if (r.staleness_s.empty()) return;
    const double n = static_cast<double>(r.staleness_s.size());
    for (auto& v : r.subcarrier_snr) v /= n;
}

}  // namespace detail

/// DL segment (2/p symbols, full band, CSI from the previous frame's pilot),
/// transient, UL segment (1/p symbols, pilot at index floor(n/2)), transient.
inline FrameResult run_tdd_frame(LinkState& s) {
    const auto& cfg = s.cfg;
    if (cfg.frame.mode != Duplex::tdd) throw ConfigError("run_tdd_frame: frame.mode is not TDD");
    const auto& ofdm = cfg.tdd_ofdm;
    const std::size_t n = cfg.frame.symbols_per_ul();
    const double T = ofdm.total_symbol_s();
    const double tau = cfg.frame.transient_s;
    const double t0 = s.clock_s;

    FrameResult r;
    r.mode = Duplex::tdd;
    r.symbols_per_ul = n;
    r.frame_duration_s = frame_duration(cfg.frame, T);
    r.dl_resource_elements = 2 * n * ofdm.n_sub;
    r.coherence_warning = !coherence_check(ofdm, cfg.channel, Duplex::tdd).feasible;

    if (!s.estimate) {
        r.warmup = true;
    } else {
        const auto plan = identity_plan(ofdm.n_sub);
        for (std::size_t j = 0; j < 2 * n; ++j) {
            detail::downlink_symbol(s, t0 + (static_cast<double>(j) + 0.5) * T, plan, {}, r);
            ++s.symbol_counter;
        }
        detail::finish_snr(r);
    }
    if (r.warmup) s.symbol_counter += 2 * n;

    const double t_ul = t0 + 2.0 * static_cast<double>(n) * T + tau;
    const std::size_t pilot_index = n / 2;
    std::vector<std::size_t> full(ofdm.n_sub);
    for (std::size_t l = 0; l < full.size(); ++l) full[l] = l;
    s.symbol_counter += pilot_index;
    s.estimate = detail::pilot_estimate(s, t_ul + (static_cast<double>(pilot_index) + 0.5) * T, full);
    s.symbol_counter += n - pilot_index;

    s.clock_s = t0 + r.frame_duration_s;
    return r;
}

/// 1/p + 1 symbols of duration 2T. Every symbol carries DL on D, precoded from
/// the latest UL pilot, while the UE transmits on U (pilot every
/// ifdd_pilot_period symbols, UL data otherwise).
inline FrameResult run_ifdd_frame(LinkState& s) {
    const auto& cfg = s.cfg;
    if (cfg.frame.mode != Duplex::ifdd) throw ConfigError("run_ifdd_frame: frame.mode is not IFDD");
    const auto& ofdm = cfg.ifdd_ofdm;
    const std::size_t n = cfg.frame.symbols_per_ul();
    const double T2 = ofdm.total_symbol_s();
    const double t0 = s.clock_s;
    const auto& alloc = s.allocation;
    const auto plan = interlaced_plan(alloc);
    check_leakage_delays(cfg.impairments, ofdm);

    FrameResult r;
    r.mode = Duplex::ifdd;
    r.symbols_per_ul = n;
    r.frame_duration_s = frame_duration(cfg.frame, T2 / 2.0);
    r.dl_resource_elements = (n + 1) * alloc.downlink.size();
    r.coherence_warning = !coherence_check(ofdm, cfg.channel, Duplex::ifdd).feasible;
    r.warmup = !s.estimate.has_value();

    std::uniform_int_distribution<int> bit(0, 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = t0 + (static_cast<double>(j) + 0.5) * T2;
        const bool pilot = s.symbol_counter % cfg.frame.ifdd_pilot_period == 0;
        CVec ul(ofdm.n_sub, cplx{});
        for (std::size_t u : alloc.uplink) {
            if (pilot) {
                ul[u] = s.pilots[u];
            } else {
                const auto b0 = static_cast<std::uint8_t>(bit(s.rng));
                const auto b1 = static_cast<std::uint8_t>(bit(s.rng));
                ul[u] = qpsk_map(b0, b1);
            }
        }
        if (!r.warmup) detail::downlink_symbol(s, t, plan, ul, r);
        if (pilot) s.estimate = detail::pilot_estimate(s, t, alloc.uplink);
        ++s.symbol_counter;
    }
    if (!r.warmup) detail::finish_snr(r);
    if (r.warmup) {
        r.tx_bits.clear();
        r.decided_bits.clear();
    }

    s.clock_s = t0 + r.frame_duration_s;
    return r;
}

inline FrameResult run_frame(LinkState& s) {
    return s.cfg.frame.mode == Duplex::tdd ? run_tdd_frame(s) : run_ifdd_frame(s);
}

}  // namespace ifdd

#endif  // IFDD_DUPLEX_HPP
