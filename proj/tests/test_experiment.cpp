#include <sstream>

#include <gtest/gtest.h>

#include "ifdd/experiment.hpp"

using namespace ifdd;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Config, DefaultsAreFullScale) {
    const ExperimentConfig c;
    EXPECT_DOUBLE_EQ(c.link.tdd_ofdm.bandwidth_hz, 20e6);
    EXPECT_EQ(c.link.tdd_ofdm.n_sub, 1024u);
    EXPECT_EQ(c.link.ifdd_ofdm.n_sub, 2048u);
    EXPECT_EQ(c.link.tdd_ofdm.cp_samples, 128u);
    EXPECT_DOUBLE_EQ(c.link.tdd_ofdm.carrier_hz, 2.1e9);
    EXPECT_EQ(c.link.channel.n_taps, 11u);
    EXPECT_EQ(c.link.channel.n_antennas, 128u);
    EXPECT_DOUBLE_EQ(c.link.snr_db, 3.0);
    EXPECT_DOUBLE_EQ(c.link.frame.transient_s, 1e-6);
    EXPECT_EQ(c.link.impairments.adc_bits, 8);
    EXPECT_TRUE(validate(c).empty());
}

TEST(Config, DeskScaleIsValid) {
    ExperimentConfig c;
    apply_desk_scale(c);
    EXPECT_TRUE(validate(c).empty());
    EXPECT_EQ(c.sweep.antennas, (std::vector<std::size_t>{16}));
    EXPECT_EQ(c.link.ifdd_ofdm.n_sub, 512u);
}

TEST(Config, RoundTripIsLossless) {
    ExperimentConfig c;
    apply_desk_scale(c);
    c.seed = 12345678901234ULL;
    c.link.impairments.leakage[2] = {0.0123456789, 1.5e-7};
    c.link.snr_db = 3.1415926535897931;
    c.sweep.pilot_rates = {1.0 / 8.0, 1.0 / 3.0};
    c.sweep.modes = {Duplex::ifdd};
    c.fig5.cfo_min = 2e-4;
    const auto text = emit_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(emit_config(back), text);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.link.snr_db, c.link.snr_db);
    EXPECT_EQ(back.link.impairments.leakage[2].delay_s, 1.5e-7);
    EXPECT_EQ(back.sweep.pilot_rates, c.sweep.pilot_rates);
}

TEST(Config, ParseOnTopOfBase) {
    const auto c = parse_config("[link]\nsnr_db = 10\n\n[sweep]\npilot_rates = 1/2, 1\n");
    EXPECT_DOUBLE_EQ(c.link.snr_db, 10.0);
    EXPECT_EQ(c.sweep.pilot_rates, (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(c.link.tdd_ofdm.n_sub, 1024u);
}

TEST(Config, ErrorsNameFieldOrLine) {
    try {
        parse_config("[link]\nsnr_db = abc\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("link.snr_db"), std::string::npos) << e.what();
    }
    try {
        parse_config("[link]\nbogus = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("link.bogus"), std::string::npos) << e.what();
    }
    try {
        parse_config("[link]\nsnr_db = 1\nthis line is broken\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    ExperimentConfig c;
    EXPECT_THROW(apply_override(c, "link.snr_db"), ConfigError);
    apply_override(c, "ofdm.bandwidth_hz=10e6");
    EXPECT_DOUBLE_EQ(c.link.ifdd_ofdm.bandwidth_hz, 10e6);
}

TEST(Validate, DelayBeyondPrefixNamed) {
    ExperimentConfig c;
    c.link.impairments.leakage[0] = {0.1, 20e-6};
    const auto v = validate(c);
    EXPECT_TRUE(mentions(v, "impairments.delay1_s")) << v.size();
}

TEST(Validate, NonIntegerPilotRateNamed) {
    ExperimentConfig c;
    c.sweep.pilot_rates = {0.3};
    EXPECT_TRUE(mentions(validate(c), "pilot_rate"));
}

TEST(Validate, CoherenceAndNumerology) {
    ExperimentConfig c;
    c.link.channel.coherence_bw_hz = 25e3;
    EXPECT_TRUE(mentions(validate(c), "IFDD coherence"));
    c = ExperimentConfig{};
    c.link.ifdd_ofdm.n_sub = 1024;
    EXPECT_TRUE(mentions(validate(c), "ofdm.n_sub_ifdd"));
    c = ExperimentConfig{};
    c.link.channel.n_taps = 200;
    EXPECT_TRUE(mentions(validate(c), "channel.n_taps"));
}

TEST(Validate, CollectsAllViolations) {
    ExperimentConfig c;
    c.sweep.pilot_rates = {0.3};
    c.link.impairments.leakage[3] = {0.1, 1e-3};
    c.sweep.seeds = 0;
    EXPECT_GE(validate(c).size(), 3u);
}

TEST(Figures, NamesAndSchemas) {
    for (const char* n : {"fig3", "fig5", "fig6", "fig11", "fig12"}) EXPECT_STREQ(figure_name(parse_figure(n)), n);
    EXPECT_THROW(parse_figure("fig4"), ConfigError);
    EXPECT_EQ(figure_columns(Figure::fig5).front(), "cfo_norm");
}

TEST(Figures, HeaderEmbedsConfigAndSeed) {
    ExperimentConfig c;
    c.seed = 77;
    c.fig5.points = 3;
    c.fig5.mc_trials = 2;
    const auto out = run_figure(Figure::fig5, c);
    EXPECT_EQ(out.rows, 3u);
    EXPECT_NE(out.csv.find("# seed = 77"), std::string::npos);
    EXPECT_NE(out.csv.find("#   [ofdm]"), std::string::npos);
    EXPECT_NE(out.csv.find("cfo_norm,sir_db,sir_mc_db,mc_trials\n"), std::string::npos);

    std::string embedded;
    std::istringstream in(out.csv);
    for (std::string line; std::getline(in, line);)
        if (line.rfind("#   ", 0) == 0) embedded += line.substr(4) + "\n";
    EXPECT_EQ(emit_config(parse_config(embedded)), emit_config(c));
}

TEST(Figures, Fig5Decreasing) {
    ExperimentConfig c;
    c.fig5.mc_trials = 0;
    const auto rows = csv_rows(run_figure(Figure::fig5, c).csv);
    ASSERT_EQ(rows.size(), 26u);
    for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
}

TEST(Figures, Fig6TwoScenariosOrdered) {
    const ExperimentConfig c;
    const auto rows = csv_rows(run_figure(Figure::fig6, c).csv);
    ASSERT_EQ(rows.size(), 23u);
    for (std::size_t i = 0; i < 11; ++i) {
        EXPECT_EQ(rows[1 + i][0], rows[12 + i][0]);
        EXPECT_GT(std::stod(rows[12 + i][4]), std::stod(rows[1 + i][4]));
        if (i) {
            EXPECT_GT(std::stod(rows[1 + i][4]), std::stod(rows[i][4]));
        }
    }
}

TEST(Figures, Fig3SmallRun) {
    ExperimentConfig c;
    c.fig3.n_sub = {64, 256};
    c.fig3.channel_orders = {2, 10};
    c.fig3.realizations = 200;
    const auto out = run_figure(Figure::fig3, c);
    const auto rows = csv_rows(out.csv);
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_NEAR(std::stod(rows[i][2]), std::stod(rows[i][3]), 0.02) << i;
}

TEST(Figures, SweepIsDeterministicAndFlagsBadPoints) {
    ExperimentConfig c;
    apply_desk_scale(c);
    c.sweep.pilot_rates = {0.5};
    c.sweep.speeds_kmh = {10};
    c.sweep.antennas = {2};
    c.sweep.n_frames = 2;
    c.sweep.seeds = 1;
    const auto a = run_figure(Figure::fig11, c);
    const auto b = run_figure(Figure::fig11, c);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.rows, 2u);
    EXPECT_EQ(a.flagged, 0u);
    c.seed = 2;
    EXPECT_NE(run_figure(Figure::fig11, c).csv, a.csv);
}

TEST(Figures, InvalidConfigRefused) {
    ExperimentConfig c;
    c.sweep.pilot_rates = {0.3};
    EXPECT_THROW(run_figure(Figure::fig6, c), ConfigError);
}
