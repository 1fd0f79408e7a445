// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_EVALUATION_HPP
#define IFDD_EVALUATION_HPP

#include <algorithm>
#include <atomic>
#include <bit>
#include <optional>
#include <span>
#include <thread>

#include "ifdd/duplex.hpp"

namespace ifdd {

inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Bit errors split by QPSK bit position (even index = I bit, odd = Q bit).
struct BitErrorCounts {
    std::array<std::size_t, 2> errors{};
    std::array<std::size_t, 2> totals{};

    void add(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> decided) {
        if (tx.size() != decided.size()) throw ConfigError("bit arrays differ in length");
        for (std::size_t i = 0; i < tx.size(); ++i) {
            ++totals[i % 2];
            errors[i % 2] += (tx[i] != decided[i]);
        }
    }
    void merge(const BitErrorCounts& o) {
        for (int b = 0; b < 2; ++b) {
            errors[b] += o.errors[b];
            totals[b] += o.totals[b];
        }
    }
    std::size_t n_bits() const { return totals[0] + totals[1]; }

    /// Sum over the two bit channels of 1 - h2(p_e).
    double mutual_information() const {
        if (n_bits() == 0) throw ConfigError("bicm_mi: no bits");
        double mi = 0.0;
        for (int b = 0; b < 2; ++b) {
            if (totals[b] == 0) continue;
            const double pe = static_cast<double>(errors[b]) / static_cast<double>(totals[b]);
            mi += 1.0 - binary_entropy(pe);
        }
        return mi;
    }

    /// Pooled error rate, folded into [0, 0.5].
    double ber() const {
        if (n_bits() == 0) return 0.0;
        const double p = static_cast<double>(errors[0] + errors[1]) / static_cast<double>(n_bits());
        return std::min(p, 1.0 - p);
    }
};

/// Hard-decision BICM mutual information in bits per QPSK channel use.
inline double bicm_mi(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> decided_bits) {
    if (tx_bits.empty()) throw ConfigError("bicm_mi: empty input");
    BitErrorCounts c;
    c.add(tx_bits, decided_bits);
    return c.mutual_information();
}

struct RateResult {
    double rate_bps_hz = 0.0;
    double mi_per_re = 0.0;
    double ber = 0.0;
    std::size_t n_bits = 0;
    std::size_t n_frames = 0;
};

/// Streams frames of one configuration into an achievable-rate estimate.
class RateAccumulator {
public:
    RateAccumulator(double bandwidth_hz, double expected_frame_s) : bandwidth_hz_(bandwidth_hz), frame_s_(expected_frame_s) {}

    void add(const FrameResult& f) {
        if (f.warmup) return;
        if (std::abs(f.frame_duration_s - frame_s_) > 1e-12 * frame_s_)
            throw ConfigError("achievable_rate: frames from mixed configurations (frame duration)");
        if (n_frames_ == 0) {
            mode_ = f.mode;
            res_ = f.dl_resource_elements;
        } else if (f.mode != mode_ || f.dl_resource_elements != res_) {
            throw ConfigError("achievable_rate: frames from mixed configurations");
        }
        counts_.add(f.tx_bits, f.decided_bits);
        ++n_frames_;
    }

    std::size_t n_frames() const { return n_frames_; }
    const BitErrorCounts& counts() const { return counts_; }

    /// I = MI * (DL resource elements per frame) / (B T_frame). MI is pooled over
    /// frames; the per-frame rate has the same denominator so the frame average
    /// equals the pooled value.
    RateResult result() const {
        if (n_frames_ == 0) throw ConfigError("achievable_rate: no non-warm-up frames");
        RateResult r;
        r.mi_per_re = counts_.mutual_information();
        r.rate_bps_hz = r.mi_per_re * static_cast<double>(res_) / (bandwidth_hz_ * frame_s_);
        r.ber = counts_.ber();
        r.n_bits = counts_.n_bits();
        r.n_frames = n_frames_;
        return r;
    }

private:
    double bandwidth_hz_;
    double frame_s_;
    Duplex mode_ = Duplex::tdd;
    std::size_t res_ = 0;
    std::size_t n_frames_ = 0;
    BitErrorCounts counts_;
};

/// `cfg` is the TDD numerology; IFDD symbols last twice as long.
inline RateResult achievable_rate(std::span<const FrameResult> frames, const OfdmConfig& cfg, const FrameConfig& fc) {
    RateAccumulator acc(cfg.bandwidth_hz, frame_duration(fc, cfg.total_symbol_s()));
    for (const auto& f : frames) acc.add(f);
    return acc.result();
}

// ------------------------------------------------------------------ sweeps

struct SweepPoint {
    Duplex mode = Duplex::tdd;
    double pilot_rate = 1.0 / 3.0;
    std::size_t n_antennas = 16;
    double speed_kmh = 0.0;
    double snr_db = 3.0;
};

struct SweepGrid {
    std::vector<Duplex> modes{Duplex::tdd, Duplex::ifdd};
    std::vector<double> pilot_rates{1.0 / 8.0, 1.0 / 3.0, 1.0 / 2.0, 1.0};
    std::vector<std::size_t> antennas{128};
    std::vector<double> speeds_kmh{10.0, 45.0, 100.0};
    std::vector<double> snr_db{3.0};
    std::size_t n_frames = 200;
    std::size_t seeds = 3;
    std::size_t frames_per_realization = 1;
    double doppler_time_scale = 1.0;  // multiplies f_D; keeps f_D T fixed when T is shortened
    std::uint64_t master_seed = 1;

    /// Deterministic row order: mode, p, M, speed, SNR (outermost first).
    std::vector<SweepPoint> points() const {
        std::vector<SweepPoint> pts;
        for (auto mode : modes)
            for (double p : pilot_rates)
                for (std::size_t m : antennas)
                    for (double v : speeds_kmh)
                        for (double snr : snr_db) pts.push_back({mode, p, m, v, snr});
        return pts;
    }
};

struct RateRow {
    SweepPoint point;
    double doppler_hz = 0.0;
    double rate_bps_hz = 0.0;
    double rate_std = 0.0;  // across seeds
    double mi_per_re = 0.0;
    double ber = 0.0;
    std::size_t n_bits = 0;
    std::uint64_t seed = 0;
    bool flagged = false;
    std::string error;
};

namespace detail {
inline constexpr std::uint64_t kChannelStream = 0x43484e4cULL;
inline constexpr std::uint64_t kPilotStream = 0x50494c54ULL;

inline std::uint64_t point_stream(const SweepPoint& p) {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(p.mode));
    h = mix64(h ^ std::llround(1.0 / p.pilot_rate));
    h = mix64(h ^ p.n_antennas);
    h = mix64(h ^ std::bit_cast<std::uint64_t>(p.speed_kmh));
    return mix64(h ^ std::bit_cast<std::uint64_t>(p.snr_db));
}
}  // namespace detail

/// Seeds for realization `trial` of replica `replica`. Channel and pilot
/// streams ignore the point, so every point of a grid is evaluated on the same
/// fading realizations and mode or pilot-rate comparisons are paired.
inline LinkSeeds point_seeds(std::uint64_t master, const SweepPoint& p, std::uint64_t replica, std::uint64_t trial) {
    const std::uint64_t base = mix64(master + replica);
    return {derive_seed(base, detail::kChannelStream, trial), derive_seed(base, detail::point_stream(p), trial),
            derive_seed(master, detail::kPilotStream, replica)};
}

inline LinkConfig configure_point(const LinkConfig& base, const SweepPoint& p, double doppler_time_scale) {
    LinkConfig cfg = base;
    cfg.frame.mode = p.mode;
    cfg.frame.pilot_rate = p.pilot_rate;
    cfg.channel.n_antennas = p.n_antennas;
    cfg.channel.doppler_hz = doppler_from_speed(p.speed_kmh, base.tdd_ofdm.carrier_hz) * doppler_time_scale;
    cfg.snr_db = p.snr_db;
    return cfg;
}

/// One grid point. Each replica measures n_frames frames; every
/// frames_per_realization of them share a fresh channel realization that is
/// first used for one warm-up frame (CSI acquisition, excluded).
inline RateRow run_point(const SweepPoint& p, const LinkConfig& base, const SweepGrid& grid) {
    RateRow row;
    row.point = p;
    row.seed = grid.master_seed;
    const LinkConfig cfg = configure_point(base, p, grid.doppler_time_scale);
    row.doppler_hz = cfg.channel.doppler_hz;
    const double frame_s = frame_duration(cfg.frame, cfg.tdd_ofdm.total_symbol_s());
    const std::size_t per = std::max<std::size_t>(1, grid.frames_per_realization);

    BitErrorCounts pooled;
    std::vector<double> rates;
    double mi_sum = 0.0;
    for (std::size_t s = 0; s < grid.seeds; ++s) {
        RateAccumulator acc(cfg.tdd_ofdm.bandwidth_hz, frame_s);
        for (std::size_t trial = 0; acc.n_frames() < grid.n_frames; ++trial) {
            LinkState state = make_link_state(cfg, point_seeds(grid.master_seed, p, s, trial));
            (void)run_frame(state);
            for (std::size_t f = 0; f < per && acc.n_frames() < grid.n_frames; ++f) acc.add(run_frame(state));
        }
        const auto r = acc.result();
        rates.push_back(r.rate_bps_hz);
        mi_sum += r.mi_per_re;
        pooled.merge(acc.counts());
    }
    const double n = static_cast<double>(rates.size());
    for (double r : rates) row.rate_bps_hz += r / n;
    for (double r : rates) row.rate_std += (r - row.rate_bps_hz) * (r - row.rate_bps_hz);
    row.rate_std = rates.size() > 1 ? std::sqrt(row.rate_std / (n - 1.0)) : 0.0;
    row.mi_per_re = mi_sum / n;
    row.ber = pooled.ber();
    row.n_bits = pooled.n_bits();
    return row;
}

/// Runs every grid point on a worker pool. Rows come back in grid order; a
/// point that throws becomes a flagged row carrying the message.
inline std::vector<RateRow> sweep(const SweepGrid& grid, const LinkConfig& base, std::size_t threads = 0) {
    const auto pts = grid.points();
    if (pts.empty()) throw ConfigError("sweep: empty grid");
    if (grid.seeds == 0 || grid.n_frames == 0) throw ConfigError("sweep: seeds and n_frames must be positive");
    std::vector<RateRow> rows(pts.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, pts.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pts.size(); i = next++) {
            try {
                rows[i] = run_point(pts[i], base, grid);
            } catch (const std::exception& e) {
                rows[i] = RateRow{};
                rows[i].point = pts[i];
                rows[i].seed = grid.master_seed;
                rows[i].flagged = true;
                rows[i].error = e.what();
            }
        }
    };
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return rows;
}

/// First speed at which mi_per_re falls below `threshold`, linearly
/// interpolated between grid speeds. Rows must share mode and p.
inline std::optional<double> crossover_speed(std::vector<RateRow> rows, double threshold = 1.0) {
    std::sort(rows.begin(), rows.end(),
              [](const RateRow& a, const RateRow& b) { return a.point.speed_kmh < b.point.speed_kmh; });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].flagged || rows[i].mi_per_re >= threshold) continue;
        if (i == 0) return rows[0].point.speed_kmh;
        const auto& a = rows[i - 1];
        const auto& b = rows[i];
        const double w = (a.mi_per_re - threshold) / (a.mi_per_re - b.mi_per_re);
        return a.point.speed_kmh + w * (b.point.speed_kmh - a.point.speed_kmh);
    }
    return std::nullopt;
}

}  // namespace ifdd

#endif  // IFDD_EVALUATION_HPP
