// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_EXPERIMENT_HPP
#define IFDD_EXPERIMENT_HPP

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ifdd/channel.hpp"
#include "ifdd/duplex.hpp"
#include "ifdd/evaluation.hpp"
#include "ifdd/impairments.hpp"

namespace ifdd {

struct Fig3Config {
    std::vector<std::size_t> n_sub{64, 128, 256, 512, 1024, 2048};
    std::vector<std::size_t> channel_orders{2, 10, 50};
    std::size_t realizations = 1000;
    std::size_t antennas = 1;
};

struct Fig5Config {
    double cfo_min = 1e-3;  // normalised to the subcarrier spacing
    double cfo_max = 0.5;
    std::size_t points = 25;
    std::size_t subcarrier = 2;
    std::size_t mc_trials = 500;
};

struct Fig6Config {
    std::vector<double> rho_db{-10.0, -30.0};
    std::size_t max_antennas = 1024;
};

struct Fig12Config {
    std::vector<double> speeds_kmh{0, 25, 50, 75, 100, 125, 150, 175, 200, 250, 300};
    std::size_t n_frames = 200;
    std::size_t seeds = 3;
};

/// Complete description of one run. Defaults are the full-scale LTE-like
/// parameter set; apply_desk_scale() switches to the reduced one.
struct ExperimentConfig {
    LinkConfig link{};
    SweepGrid sweep{};
    Fig3Config fig3{};
    Fig5Config fig5{};
    Fig6Config fig6{};
    Fig12Config fig12{};
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::string out;
};

inline void apply_desk_scale(ExperimentConfig& c) {
    c.link.tdd_ofdm.n_sub = 256;
    c.link.tdd_ofdm.cp_samples = 32;
    c.link.ifdd_ofdm.n_sub = 512;
    c.link.ifdd_ofdm.cp_samples = 64;
    c.sweep.antennas = {16};
    c.sweep.doppler_time_scale = 4.0;  // T is 4x shorter; keep f_D T at the nominal km/h value
    c.sweep.n_frames = 200;
    c.sweep.seeds = 3;
    c.fig12.speeds_kmh = {0, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600};
    c.fig12.n_frames = 100;
    c.fig12.seeds = 2;
}

// ------------------------------------------------------------ text values

namespace cfgio {

inline std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

inline std::string fmt_rate(double p) {
    const double inv = 1.0 / p;
    const double r = std::round(inv);
    if (r >= 1.0 && std::abs(inv - r) < 1e-12 * r && std::abs(1.0 / r - p) == 0.0)
        return r == 1.0 ? "1" : "1/" + fmt(static_cast<std::size_t>(r));
    return fmt(p);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
    return s;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& text, const std::string& field) {
    double v = 0.0;
    const auto t = trim(text);
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError(field + ": '" + text + "' is not a number");
    return v;
}

inline std::size_t to_size(const std::string& text, const std::string& field) {
    std::uint64_t v = 0;
    const auto t = trim(text);
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError(field + ": '" + text + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline std::uint64_t to_u64(const std::string& text, const std::string& field) {
    return static_cast<std::uint64_t>(to_size(text, field));
}

inline bool to_bool(const std::string& text, const std::string& field) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(field + ": '" + text + "' is not a boolean");
}

inline Duplex to_mode(const std::string& text, const std::string& field) {
    const auto t = trim(text);
    if (t == "TDD" || t == "tdd") return Duplex::tdd;
    if (t == "IFDD" || t == "ifdd") return Duplex::ifdd;
    throw ConfigError(field + ": '" + text + "' is not TDD or IFDD");
}

inline double to_rate(const std::string& text, const std::string& field) {
    try {
        return parse_pilot_rate(trim(text));
    } catch (const ConfigError& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

template <class T, class F>
std::vector<T> to_list(const std::string& text, const std::string& field, F conv) {
    std::vector<T> out;
    for (const auto& item : split(text)) out.push_back(conv(item, field));
    return out;
}

/// Field table: dotted key, emitter and parser for every ExperimentConfig member.
struct Field {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline const std::vector<Field>& fields() {
    using E = ExperimentConfig;
    static const std::vector<Field> table = [] {
        std::vector<Field> t;
        auto num = [&t](std::string key, auto member) {
            t.push_back({key, [member](const E& c) { return fmt(member(const_cast<E&>(c))); },
                         [member, key](E& c, const std::string& v) { member(c) = to_double(v, key); }});
        };
        auto cnt = [&t](std::string key, auto member) {
            t.push_back({key, [member](const E& c) { return fmt(static_cast<std::size_t>(member(const_cast<E&>(c)))); },
                         [member, key](E& c, const std::string& v) {
                             member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_size(v, key));
                         }});
        };
        auto flag = [&t](std::string key, auto member) {
            t.push_back({key, [member](const E& c) { return fmt(member(const_cast<E&>(c))); },
                         [member, key](E& c, const std::string& v) { member(c) = to_bool(v, key); }});
        };
        auto dlist = [&t](std::string key, auto member) {
            t.push_back({key, [member](const E& c) { return join(member(const_cast<E&>(c)), [](double x) { return fmt(x); }); },
                         [member, key](E& c, const std::string& v) { member(c) = to_list<double>(v, key, to_double); }});
        };
        auto slist = [&t](std::string key, auto member) {
            t.push_back({key,
                         [member](const E& c) { return join(member(const_cast<E&>(c)), [](std::size_t x) { return fmt(x); }); },
                         [member, key](E& c, const std::string& v) { member(c) = to_list<std::size_t>(v, key, to_size); }});
        };

        num("ofdm.bandwidth_hz", [](E& c) -> double& { return c.link.tdd_ofdm.bandwidth_hz; });
        num("ofdm.carrier_hz", [](E& c) -> double& { return c.link.tdd_ofdm.carrier_hz; });
        cnt("ofdm.n_sub_tdd", [](E& c) -> std::size_t& { return c.link.tdd_ofdm.n_sub; });
        cnt("ofdm.cp_tdd", [](E& c) -> std::size_t& { return c.link.tdd_ofdm.cp_samples; });
        cnt("ofdm.n_sub_ifdd", [](E& c) -> std::size_t& { return c.link.ifdd_ofdm.n_sub; });
        cnt("ofdm.cp_ifdd", [](E& c) -> std::size_t& { return c.link.ifdd_ofdm.cp_samples; });

        cnt("channel.n_taps", [](E& c) -> std::size_t& { return c.link.channel.n_taps; });
        cnt("channel.n_antennas", [](E& c) -> std::size_t& { return c.link.channel.n_antennas; });
        num("channel.doppler_hz", [](E& c) -> double& { return c.link.channel.doppler_hz; });
        num("channel.coherence_bw_hz", [](E& c) -> double& { return c.link.channel.coherence_bw_hz; });
        num("channel.coherence_time_s", [](E& c) -> double& { return c.link.channel.coherence_time_s; });
        cnt("channel.n_scatterers", [](E& c) -> std::size_t& { return c.link.channel.n_scatterers; });

        num("impairments.cfo_hz", [](E& c) -> double& { return c.link.impairments.cfo_hz; });
        for (std::size_t i = 0; i < 4; ++i) {
            num("impairments.rho" + std::to_string(i + 1),
                [i](E& c) -> double& { return c.link.impairments.leakage[i].rho; });
            num("impairments.delay" + std::to_string(i + 1) + "_s",
                [i](E& c) -> double& { return c.link.impairments.leakage[i].delay_s; });
        }
        t.push_back({"impairments.adc_bits", [](const E& c) { return std::to_string(c.link.impairments.adc_bits); },
                     [](E& c, const std::string& v) {
                         c.link.impairments.adc_bits = static_cast<int>(to_size(v, "impairments.adc_bits"));
                     }});
        flag("impairments.adc_enabled", [](E& c) -> bool& { return c.link.impairments.adc_enabled; });
        num("impairments.tx_power_w", [](E& c) -> double& { return c.link.impairments.tx_power_w; });
        num("impairments.rx_power_w", [](E& c) -> double& { return c.link.impairments.rx_power_w; });
        num("impairments.eps1", [](E& c) -> double& { return c.link.impairments.eps1; });
        num("impairments.eps2", [](E& c) -> double& { return c.link.impairments.eps2; });
        flag("impairments.power_scaling", [](E& c) -> bool& { return c.link.impairments.power_scaling; });

        t.push_back({"frame.mode", [](const E& c) { return std::string(to_string(c.link.frame.mode)); },
                     [](E& c, const std::string& v) { c.link.frame.mode = to_mode(v, "frame.mode"); }});
        t.push_back({"frame.pilot_rate", [](const E& c) { return fmt_rate(c.link.frame.pilot_rate); },
                     [](E& c, const std::string& v) { c.link.frame.pilot_rate = to_rate(v, "frame.pilot_rate"); }});
        num("frame.transient_s", [](E& c) -> double& { return c.link.frame.transient_s; });
        cnt("frame.ifdd_pilot_period", [](E& c) -> std::size_t& { return c.link.frame.ifdd_pilot_period; });

        num("link.snr_db", [](E& c) -> double& { return c.link.snr_db; });
        num("link.pilot_snr_db", [](E& c) -> double& { return c.link.pilot_snr_db; });
        num("link.dl_power", [](E& c) -> double& { return c.link.dl_power; });

        t.push_back({"sweep.modes",
                     [](const E& c) { return join(c.sweep.modes, [](Duplex m) { return std::string(to_string(m)); }); },
                     [](E& c, const std::string& v) { c.sweep.modes = to_list<Duplex>(v, "sweep.modes", to_mode); }});
        t.push_back({"sweep.pilot_rates", [](const E& c) { return join(c.sweep.pilot_rates, fmt_rate); },
                     [](E& c, const std::string& v) {
                         c.sweep.pilot_rates = to_list<double>(v, "sweep.pilot_rates", to_rate);
                     }});
        slist("sweep.antennas", [](E& c) -> std::vector<std::size_t>& { return c.sweep.antennas; });
        dlist("sweep.speeds_kmh", [](E& c) -> std::vector<double>& { return c.sweep.speeds_kmh; });
        dlist("sweep.snr_db", [](E& c) -> std::vector<double>& { return c.sweep.snr_db; });
        cnt("sweep.n_frames", [](E& c) -> std::size_t& { return c.sweep.n_frames; });
        cnt("sweep.seeds", [](E& c) -> std::size_t& { return c.sweep.seeds; });
        cnt("sweep.frames_per_realization", [](E& c) -> std::size_t& { return c.sweep.frames_per_realization; });
        num("sweep.doppler_time_scale", [](E& c) -> double& { return c.sweep.doppler_time_scale; });

        slist("fig3.n_sub", [](E& c) -> std::vector<std::size_t>& { return c.fig3.n_sub; });
        slist("fig3.channel_orders", [](E& c) -> std::vector<std::size_t>& { return c.fig3.channel_orders; });
        cnt("fig3.realizations", [](E& c) -> std::size_t& { return c.fig3.realizations; });
        cnt("fig3.antennas", [](E& c) -> std::size_t& { return c.fig3.antennas; });

        num("fig5.cfo_min", [](E& c) -> double& { return c.fig5.cfo_min; });
        num("fig5.cfo_max", [](E& c) -> double& { return c.fig5.cfo_max; });
        cnt("fig5.points", [](E& c) -> std::size_t& { return c.fig5.points; });
        cnt("fig5.subcarrier", [](E& c) -> std::size_t& { return c.fig5.subcarrier; });
        cnt("fig5.mc_trials", [](E& c) -> std::size_t& { return c.fig5.mc_trials; });

        dlist("fig6.rho_db", [](E& c) -> std::vector<double>& { return c.fig6.rho_db; });
        cnt("fig6.max_antennas", [](E& c) -> std::size_t& { return c.fig6.max_antennas; });

        dlist("fig12.speeds_kmh", [](E& c) -> std::vector<double>& { return c.fig12.speeds_kmh; });
        cnt("fig12.n_frames", [](E& c) -> std::size_t& { return c.fig12.n_frames; });
        cnt("fig12.seeds", [](E& c) -> std::size_t& { return c.fig12.seeds; });

        t.push_back({"run.seed", [](const E& c) { return std::to_string(c.seed); },
                     [](E& c, const std::string& v) { c.seed = to_u64(v, "run.seed"); }});
        cnt("run.threads", [](E& c) -> std::size_t& { return c.threads; });
        t.push_back({"run.out", [](const E& c) { return c.out; }, [](E& c, const std::string& v) { c.out = trim(v); }});
        return t;
    }();
    return table;
}

}  // namespace cfgio

/// Sets one dotted key (section.key). Unknown keys are rejected by name.
inline void set_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
    for (const auto& f : cfgio::fields()) {
        if (f.key == key) {
            f.set(c, value);
            // both numerologies share bandwidth and carrier
            c.link.ifdd_ofdm.bandwidth_hz = c.link.tdd_ofdm.bandwidth_hz;
            c.link.ifdd_ofdm.carrier_hz = c.link.tdd_ofdm.carrier_hz;
            return;
        }
    }
    throw ConfigError("unknown configuration field '" + key + "'");
}

/// Applies "section.key=value".
inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    set_field(c, cfgio::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// INI text; parse_config(emit_config(c)) reproduces c exactly.
inline std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : cfgio::fields()) {
        const auto dot = f.key.find('.');
        const auto sec = f.key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) os << "\n";
            os << "[" << sec << "]\n";
            section = sec;
        }
        os << f.key.substr(dot + 1) << " = " << f.get(c) << "\n";
    }
    return os.str();
}

/// Reads INI text on top of `base`. Parse errors carry the line number.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [sec, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config key '" + sec + "' must be inside a [section]");
        for (const auto& [key, value] : body) set_field(base, sec + "." + key, value.data());
    }
    return base;
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream in(text);
    return parse_config(in, std::move(base));
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in, std::move(base));
}

/// Every constraint violation, each naming its field. Empty means valid.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> v;
    auto guard = [&v](auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            v.emplace_back(e.what());
        }
    };
    const auto& L = c.link;
    guard([&] { L.tdd_ofdm.validate(); });
    guard([&] {
        try {
            L.ifdd_ofdm.validate();
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            const auto at = msg.find("ofdm.n_sub");
            if (at != std::string::npos) msg.replace(at, 10, "ofdm.n_sub_ifdd");
            throw ConfigError(msg);
        }
    });
    guard([&] { L.channel.validate(); });
    guard([&] { L.impairments.validate(); });
    guard([&] { L.frame.validate(); });
    if (L.tdd_ofdm.block_length() * 2 != L.ifdd_ofdm.block_length())
        v.push_back("ofdm.n_sub_ifdd/ofdm.cp_ifdd: IFDD symbol must last exactly two TDD symbols (n_sub + cp doubled)");
    if (L.channel.n_taps > L.tdd_ofdm.cp_samples + 1)
        v.push_back("channel.n_taps: delay spread exceeds ofdm.cp_tdd");
    if (L.channel.n_taps > L.ifdd_ofdm.cp_samples + 1)
        v.push_back("channel.n_taps: delay spread exceeds ofdm.cp_ifdd");
    for (std::size_t i = 0; i < L.impairments.leakage.size(); ++i) {
        const auto d = delay_samples(L.impairments.leakage[i].delay_s, L.ifdd_ofdm);
        if (d > L.ifdd_ofdm.cp_samples)
            v.push_back("impairments.delay" + std::to_string(i + 1) + "_s: reflection of " + std::to_string(d) +
                        " samples exceeds the cyclic prefix (" + std::to_string(L.ifdd_ofdm.cp_samples) +
                        " samples), subcarrier orthogonality lost");
    }
    const auto tdd = coherence_check(L.tdd_ofdm, L.channel, Duplex::tdd);
    if (!tdd.feasible)
        v.push_back("channel.coherence_bw_hz/coherence_time_s: TDD coherence bound violated (time margin " +
                    cfgio::fmt(tdd.time_margin_s) + " s, bandwidth margin " + cfgio::fmt(tdd.bandwidth_margin_s) + " s)");
    const auto ifdd = coherence_check(L.ifdd_ofdm, L.channel, Duplex::ifdd);
    if (!ifdd.feasible)
        v.push_back("channel.coherence_bw_hz/coherence_time_s: IFDD coherence bound violated (time margin " +
                    cfgio::fmt(ifdd.time_margin_s) + " s, bandwidth margin " + cfgio::fmt(ifdd.bandwidth_margin_s) +
                    " s)");
    for (double p : c.sweep.pilot_rates) {
        FrameConfig f;
        f.pilot_rate = p;
        guard([&] {
            try {
                (void)f.symbols_per_ul();
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("sweep.pilot_rates: ") + e.what());
            }
        });
    }
    if (c.sweep.modes.empty()) v.push_back("sweep.modes: empty");
    if (c.sweep.pilot_rates.empty()) v.push_back("sweep.pilot_rates: empty");
    if (c.sweep.antennas.empty()) v.push_back("sweep.antennas: empty");
    for (auto m : c.sweep.antennas)
        if (m == 0) v.push_back("sweep.antennas: must be positive");
    if (c.sweep.speeds_kmh.empty()) v.push_back("sweep.speeds_kmh: empty");
    for (double s : c.sweep.speeds_kmh)
        if (s < 0.0) v.push_back("sweep.speeds_kmh: must be non-negative");
    for (double s : c.fig12.speeds_kmh)
        if (s < 0.0) v.push_back("fig12.speeds_kmh: must be non-negative");
    if (c.sweep.snr_db.empty()) v.push_back("sweep.snr_db: empty");
    if (c.sweep.n_frames == 0) v.push_back("sweep.n_frames: must be positive");
    if (c.sweep.seeds == 0) v.push_back("sweep.seeds: must be positive");
    if (c.fig12.n_frames == 0) v.push_back("fig12.n_frames: must be positive");
    if (c.fig12.seeds == 0) v.push_back("fig12.seeds: must be positive");
    if (!(c.sweep.doppler_time_scale > 0.0)) v.push_back("sweep.doppler_time_scale: must be positive");
    for (auto n : c.fig3.n_sub)
        for (auto l : c.fig3.channel_orders)
            if (l + 1 > n) v.push_back("fig3.channel_orders: L = " + std::to_string(l) + " needs n_sub > L");
    if (c.fig3.realizations == 0) v.push_back("fig3.realizations: must be positive");
    if (c.fig3.antennas == 0) v.push_back("fig3.antennas: must be positive");
    if (!(c.fig5.cfo_min > 0.0) || !(c.fig5.cfo_max > c.fig5.cfo_min))
        v.push_back("fig5.cfo_min/cfo_max: need 0 < cfo_min < cfo_max");
    if (c.fig5.points < 2) v.push_back("fig5.points: need at least 2");
    if (c.fig5.subcarrier >= L.tdd_ofdm.n_sub) v.push_back("fig5.subcarrier: out of range for ofdm.n_sub_tdd");
    if (c.fig6.max_antennas == 0) v.push_back("fig6.max_antennas: must be positive");
    return v;
}

// ---------------------------------------------------------------- figures

enum class Figure { fig3, fig5, fig6, fig11, fig12 };

inline Figure parse_figure(const std::string& name) {
    if (name == "fig3") return Figure::fig3;
    if (name == "fig5") return Figure::fig5;
    if (name == "fig6") return Figure::fig6;
    if (name == "fig11") return Figure::fig11;
    if (name == "fig12") return Figure::fig12;
    throw ConfigError("unknown figure '" + name + "' (expected fig3, fig5, fig6, fig11 or fig12)");
}

inline const char* figure_name(Figure f) {
    switch (f) {
        case Figure::fig3: return "fig3";
        case Figure::fig5: return "fig5";
        case Figure::fig6: return "fig6";
        case Figure::fig11: return "fig11";
        case Figure::fig12: return "fig12";
    }
    return "?";
}

/// Column schema per figure, in CSV order.
inline std::vector<std::string> figure_columns(Figure f) {
    switch (f) {
        case Figure::fig3: return {"n_sub", "channel_order", "delta_h", "delta_h_closed_form", "realizations"};
        case Figure::fig5: return {"cfo_norm", "sir_db", "sir_mc_db", "mc_trials"};
        case Figure::fig6: return {"n_antennas", "scenario", "rho_db", "stage", "sqnr_db"};
        case Figure::fig11:
        case Figure::fig12:
            return {"mode",  "pilot_rate", "n_antennas", "speed_kmh", "doppler_hz", "snr_db", "rate_bps_hz",
                    "rate_std", "mi_bpcu", "ber", "n_bits", "seed", "flagged", "error"};
    }
    return {};
}

struct FigureOutput {
    std::string csv;
    std::size_t rows = 0;
    std::size_t flagged = 0;
};

namespace detail {

inline std::string csv_header(Figure f, const ExperimentConfig& c) {
    std::ostringstream os;
    os << "# figure = " << figure_name(f) << "\n";
    os << "# seed = " << c.seed << "\n";
    os << "# seed derivation: splitmix64 counter scheme, derive_seed(master, stream, index) = "
          "mix64(mix64(master ^ mix64(stream)) + index)\n";
    os << "# config:\n";
    std::istringstream cfg(emit_config(c));
    for (std::string line; std::getline(cfg, line);) os << "#   " << line << "\n";
    const auto cols = figure_columns(f);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    return os.str();
}

inline std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
    return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += (ch == '\n' ? ' ' : ch);
    }
    return out + "\"";
}

}  // namespace detail

/// Ensemble adjacent-subcarrier correlation: for each pair (l, l+1) the
/// correlation is taken over the stacked realizations x antennas vector, then
/// averaged over pairs.
inline double ensemble_adjacent_correlation(std::size_t n_sub, std::size_t n_taps, std::size_t realizations,
                                            std::size_t antennas, std::uint64_t seed) {
    ChannelModelConfig model;
    model.n_taps = n_taps;
    model.n_antennas = antennas;
    OfdmConfig ofdm;
    ofdm.n_sub = n_sub;
    ofdm.cp_samples = 0;
    std::vector<cplx> cross(n_sub - 1, cplx{});
    std::vector<double> power(n_sub, 0.0);
    for (std::size_t r = 0; r < realizations; ++r) {
        const auto h = ctf_matrix(sample_tdl(model, derive_seed(seed, n_taps, r)), ofdm);
        for (const auto& row : h) {
            for (std::size_t l = 0; l < n_sub; ++l) power[l] += std::norm(row[l]);
            for (std::size_t l = 0; l + 1 < n_sub; ++l) cross[l] += row[l] * std::conj(row[l + 1]);
        }
    }
    double sum = 0.0;
    for (std::size_t l = 0; l + 1 < n_sub; ++l) sum += std::abs(cross[l]) / std::sqrt(power[l] * power[l + 1]);
    return sum / static_cast<double>(n_sub - 1);
}

/// Monte Carlo SIR on one subcarrier: random QPSK on every subcarrier,
/// modulate, CFO, demodulate; interference = output minus the known desired term.
inline double monte_carlo_sir(double f_off_hz, std::size_t subcarrier, const OfdmConfig& cfg, std::size_t trials,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    const cplx gain = std::polar(1.0, 2.0 * kPi * f_off_hz * cfg.cp_duration_s()) * pulse_response(f_off_hz, cfg);
    double s = 0.0, i = 0.0;
    CVec grid(cfg.n_sub);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& x : grid) {
            const auto b0 = static_cast<std::uint8_t>(bit(rng));
            const auto b1 = static_cast<std::uint8_t>(bit(rng));
            x = qpsk_map(b0, b1);
        }
        const auto y = demodulate(apply_cfo(modulate(grid, cfg), f_off_hz, 0.0, cfg), cfg);
        const cplx desired = gain * grid[subcarrier];
        s += std::norm(desired);
        i += std::norm(y[subcarrier] - desired);
    }
    return i > 0.0 ? s / i : std::numeric_limits<double>::infinity();
}

inline LinkConfig sweep_base(const ExperimentConfig& c) {
    LinkConfig base = c.link;
    base.ifdd_ofdm.bandwidth_hz = base.tdd_ofdm.bandwidth_hz;
    base.ifdd_ofdm.carrier_hz = base.tdd_ofdm.carrier_hz;
    return base;
}

inline FigureOutput run_figure(Figure fig, const ExperimentConfig& c) {
    const auto violations = validate(c);
    if (!violations.empty()) throw ConfigError(violations.front());
    FigureOutput out;
    std::ostringstream os;
    os << detail::csv_header(fig, c);
    using detail::num;

    switch (fig) {
        case Figure::fig3: {
            for (std::size_t L : c.fig3.channel_orders)
                for (std::size_t n : c.fig3.n_sub) {
                    const double d = ensemble_adjacent_correlation(n, L + 1, c.fig3.realizations, c.fig3.antennas,
                                                                   derive_seed(c.seed, 3, 0));
                    os << n << "," << L << "," << num(d) << "," << num(uniform_profile_correlation(L + 1, n)) << ","
                       << c.fig3.realizations << "\n";
                    ++out.rows;
                }
            break;
        }
        case Figure::fig5: {
            const auto& ofdm = c.link.tdd_ofdm;
            const double ratio = std::log(c.fig5.cfo_max / c.fig5.cfo_min);
            for (std::size_t k = 0; k < c.fig5.points; ++k) {
                const double x =
                    c.fig5.cfo_min * std::exp(ratio * static_cast<double>(k) / static_cast<double>(c.fig5.points - 1));
                const double f = x * ofdm.subcarrier_spacing_hz();
                const double sir = sir_analytic(f, c.fig5.subcarrier, ofdm);
                const double mc =
                    c.fig5.mc_trials ? monte_carlo_sir(f, c.fig5.subcarrier, ofdm, c.fig5.mc_trials, derive_seed(c.seed, 5, k))
                                     : std::numeric_limits<double>::quiet_NaN();
                os << num(x) << "," << num(linear_to_db(sir)) << "," << num(linear_to_db(mc)) << "," << c.fig5.mc_trials
                   << "\n";
                ++out.rows;
            }
            break;
        }
        case Figure::fig6: {
            for (double rho_db : c.fig6.rho_db)
                for (std::size_t m = 1; m <= c.fig6.max_antennas; m *= 2) {
                    ImpairmentConfig imp = c.link.impairments;
                    imp.leakage = {};
                    imp.leakage[0].rho = db_to_linear(rho_db);
                    const double q = sqnr_massive(imp, m, Stage::uplink_pilot_data);
                    os << m << ",rho_" << num(rho_db) << "dB," << num(rho_db) << ",uplink," << num(linear_to_db(q)) << "\n";
                    ++out.rows;
                }
            break;
        }
        case Figure::fig11:
        case Figure::fig12: {
            SweepGrid grid = c.sweep;
            grid.master_seed = c.seed;
            if (fig == Figure::fig12) {
                grid.speeds_kmh = c.fig12.speeds_kmh;
                grid.n_frames = c.fig12.n_frames;
                grid.seeds = c.fig12.seeds;
            }
            const auto rows = sweep(grid, sweep_base(c), c.threads);
            for (const auto& r : rows) {
                os << to_string(r.point.mode) << "," << cfgio::fmt_rate(r.point.pilot_rate) << "," << r.point.n_antennas
                   << "," << num(r.point.speed_kmh) << "," << num(r.doppler_hz) << "," << num(r.point.snr_db) << ","
                   << num(r.rate_bps_hz) << "," << num(r.rate_std) << "," << num(r.mi_per_re) << "," << num(r.ber)
                   << "," << r.n_bits << "," << r.seed << "," << (r.flagged ? 1 : 0) << ","
                   << detail::csv_escape(r.error) << "\n";
                ++out.rows;
                out.flagged += r.flagged;
            }
            break;
        }
    }
    out.csv = os.str();
    return out;
}

}  // namespace ifdd

#endif  // IFDD_EXPERIMENT_HPP
