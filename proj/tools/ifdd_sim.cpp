// SPDX-License-Identifier: Apache-2.0
// Command-line driver: regenerate figure data, validate configs, run sweeps.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ifdd/experiment.hpp"

namespace {

enum Exit : int { ok = 0, invalid = 1, usage = 2, failure = 3 };

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    bool desk_scale = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    std::size_t threads = 0;
    bool threads_given = false;
};

ifdd::ExperimentConfig resolve(const CommonOptions& o) {
    ifdd::ExperimentConfig c;
    if (o.desk_scale) ifdd::apply_desk_scale(c);
    if (!o.config_path.empty()) c = ifdd::load_config(o.config_path, c);
    for (const auto& s : o.sets) ifdd::apply_override(c, s);
    if (o.seed_given) c.seed = o.seed;
    if (!o.out.empty()) c.out = o.out;
    if (o.threads_given) c.threads = o.threads;
    return c;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_config_flag) {
    if (with_config_flag) cmd->add_option("--config", o.config_path, "INI file applied on top of the defaults");
    cmd->add_option("--set", o.sets, "Override one field, section.key=value (repeatable)");
    cmd->add_flag("--desk-scale", o.desk_scale, "Reduced numerology: M = 16, N = 256/512, fewer frames");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&o](std::uint64_t s) { o.seed = s, o.seed_given = true; }, "Master seed");
    cmd->add_option("--out", o.out, "Output CSV path");
    cmd->add_option_function<std::size_t>(
        "--threads", [&o](std::size_t n) { o.threads = n, o.threads_given = true; }, "Worker threads (0 = all cores)");
}

int write_figure(ifdd::Figure fig, const ifdd::ExperimentConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = ifdd::run_figure(fig, c);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string path = c.out.empty() ? std::string(ifdd::figure_name(fig)) + ".csv" : c.out;
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::cerr << "error: cannot write '" << path << "'\n";
        return failure;
    }
    f << result.csv;
    std::printf("%s: %zu rows (%zu flagged) in %.2f s, seed %llu -> %s\n", ifdd::figure_name(fig), result.rows,
                result.flagged, secs, static_cast<unsigned long long>(c.seed), path.c_str());
    return ok;
}

int report_invalid(const std::vector<std::string>& violations) {
    for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
    std::cerr << violations.size() << " violation(s)\n";
    return invalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IFDD vs TDD massive-MIMO OFDM link simulator"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string figure;
    auto* run = app.add_subcommand("run", "Write the CSV data of one figure (fig3, fig5, fig6, fig11, fig12)");
    run->add_option("figure", figure, "Figure id")->required();
    add_common(run, run_opts, true);

    CommonOptions val_opts;
    auto* val = app.add_subcommand("validate", "Check a config file for constraint violations without running");
    val->add_option("config", val_opts.config_path, "INI file")->required();
    add_common(val, val_opts, false);

    CommonOptions sweep_opts;
    auto* sw = app.add_subcommand("sweep", "Run the [sweep] grid of a config file and write rate rows");
    sw->add_option("config", sweep_opts.config_path, "INI file")->required();
    add_common(sw, sweep_opts, false);

    CommonOptions def_opts;
    auto* def = app.add_subcommand("defaults", "Print the resolved default configuration");
    add_common(def, def_opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (*run) {
            const auto fig = ifdd::parse_figure(figure);
            const auto c = resolve(run_opts);
            if (auto v = ifdd::validate(c); !v.empty()) return report_invalid(v);
            return write_figure(fig, c);
        }
        if (*val) {
            const auto c = resolve(val_opts);
            const auto v = ifdd::validate(c);
            if (!v.empty()) return report_invalid(v);
            std::printf("%s: valid, 0 violations\n", val_opts.config_path.c_str());
            return ok;
        }
        if (*sw) {
            auto c = resolve(sweep_opts);
            if (auto v = ifdd::validate(c); !v.empty()) return report_invalid(v);
            if (c.out.empty()) c.out = "sweep.csv";
            return write_figure(ifdd::Figure::fig11, c);
        }
        if (*def) {
            std::cout << ifdd::emit_config(resolve(def_opts));
            return ok;
        }
    } catch (const ifdd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return ok;
}
