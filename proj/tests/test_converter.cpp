#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wbsim/converter.hpp"
#include "wbsim/lut_synth.hpp"
#include "wbsim/modulation.hpp"

using namespace wbsim;

TEST_CASE("connection assignment engages |level| modules with matching polarity") {
    std::vector<Connection> c(7);
    assign_connections(0, 7, 0, false, c);
    for (auto s : c) CHECK(s == Connection::BypassPos);

    assign_connections(3, 7, 0, false, c);
    int series = 0;
    for (auto s : c) series += s == Connection::SeriesPos;
    CHECK(series == 3);

    assign_connections(-2, 7, 5, true, c);
    CHECK(c[5] == Connection::SeriesNeg);
    CHECK(c[6] == Connection::SeriesNeg);
    CHECK(c[0] == Connection::ParallelNeg);

    CHECK_THROWS_AS(assign_connections(8, 7, 0, false, c), std::out_of_range);
}

TEST_CASE("level commands map to multiples of the module voltage") {
    ConverterConfig cfg;
    cfg.balance_interval_clocks = 0;
    CascadedConverter conv(cfg, LoadModel{}, 100e6);
    conv.step(0);
    CHECK(conv.output_voltage() == 0.0);
    CascadedConverter conv3(cfg, LoadModel{}, 100e6);
    conv3.step(3);
    CHECK(conv3.output_voltage() == 60.0);
    CascadedConverter conv7(cfg, LoadModel{}, 100e6);
    conv7.step(7);
    CHECK(conv7.output_voltage() == 140.0);  // the full-arm peak
    CascadedConverter convn(cfg, LoadModel{}, 100e6);
    convn.step(-7);
    CHECK(convn.output_voltage() == -140.0);
}

TEST_CASE("parallel balancing conserves charge and dissipates energy") {
    std::vector<ModuleState> mods(2);
    mods[0] = {19.0, 100e-6, Connection::ParallelPos};
    mods[1] = {21.0, 100e-6, Connection::ParallelPos};
    double loss = apply_parallel_balancing(mods);
    CHECK(mods[0].cap_voltage == doctest::Approx(20.0));
    CHECK(mods[1].cap_voltage == doctest::Approx(20.0));
    // two equal caps: dE = C*(dV)^2/4 with dV = 2 V
    CHECK(loss == doctest::Approx(100e-6 * 4.0 / 4.0));

    double again = apply_parallel_balancing(mods);
    CHECK(again == 0.0);

    std::vector<ModuleState> seven(7);
    double expect = 0.0;
    for (int i = 0; i < 7; ++i) {
        seven[std::size_t(i)] = {15.0 + double(i), 100e-6, Connection::ParallelPos};
        expect += 15.0 + double(i);
    }
    apply_parallel_balancing(seven);
    for (const auto& m : seven) CHECK(m.cap_voltage == doctest::Approx(expect / 7.0));
}

TEST_CASE("rl load: exponential decay and dc steady state") {
    LoadModel lm;  // 2.8 ohm, 1.5 uH
    double dt = 1e-8;
    RlLoad rl(lm);
    rl.reset(10.0);
    double tau = lm.inductance / lm.resistance;
    int steps = int(tau / dt);
    for (int i = 0; i < steps; ++i) rl.step(0.0, dt);
    CHECK(rl.current() == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(0.015));

    rl.reset(0.0);
    for (int i = 0; i < steps * 12; ++i) rl.step(140.0, dt);
    CHECK(rl.current() == doctest::Approx(140.0 / 2.8).epsilon(1e-4));
}

TEST_CASE("rl load: sinusoidal drive matches the phasor magnitude") {
    LoadModel lm;
    double fc = 100e6, dt = 1e-8;
    RlLoad rl(lm);
    double f = 1e6;
    int spc = int(fc / f);
    int warm = 40 * spc / 10;  // ~4 us >> L/R
    for (int k = 0; k < warm; ++k)
        rl.step(140.0 * std::sin(2 * std::numbers::pi * f * double(k) * dt), dt);
    double re = 0, im = 0;
    for (int k = 0; k < 4 * spc; ++k) {
        double i = rl.step(
            140.0 * std::sin(2 * std::numbers::pi * f * double(warm + k) * dt), dt);
        double ph = 2 * std::numbers::pi * f * double(warm + k) * dt;
        re += i * std::cos(ph);
        im -= i * std::sin(ph);
    }
    double amp = 2.0 * std::hypot(re, im) / double(4 * spc);
    double expected = 140.0 / std::hypot(lm.resistance,
                                         2 * std::numbers::pi * f * lm.inductance);
    CHECK(amp == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("converter run: charge conservation, loss sign, energy audit") {
    ConverterConfig cfg;  // generic defaults: 100 uF, balance every 100 clocks
    LoadModel lm;
    double fc = 100e6;
    CascadedConverter conv(cfg, lm, fc);

    QFormat fmt(18, 14);
    LutTable table = build_sine_table(1024, fmt);
    auto timing = derive_timing({1e6, fc}, 1024, fmt);
    NlmModulator nlm({1.0, 7}, fmt);
    AdaptiveNlm adapt(nlm);
    std::vector<int> levels;
    ReferenceSynth synth(table, timing, LutMethod::Improved);
    std::vector<std::int64_t> raws;
    for (int c = 0; c < 50; ++c) synth.next_cycle(raws);
    std::size_t idx = 0;
    for (int c = 0; c < 50; ++c) {
        levels.clear();
        adapt.modulate_cycle(
            std::span<const std::int64_t>(raws.data() + idx, std::size_t(timing.clocks_per_cycle)),
            levels);
        idx += std::size_t(timing.clocks_per_cycle);
        for (int lv : levels) conv.step(lv);
    }

    CHECK(conv.max_charge_error() < 1e-12);
    CHECK(conv.min_parallel_loss() >= 0.0);
    CHECK(conv.balance_events() > 0);
    double scale = conv.audit().source_in + conv.audit().stored_initial;
    CHECK(std::abs(conv.audit().imbalance(conv.stored_energy())) / scale < 1e-9);
    CHECK(conv.max_spread_fraction() < 0.15);
}

TEST_CASE("output voltage equals level times mean series voltage within the spread") {
    ConverterConfig cfg;
    CascadedConverter conv(cfg, LoadModel{}, 100e6);
    for (int i = 0; i < 2000; ++i) {
        int lv = (i / 37) % 15 - 7;
        conv.step(lv);
        double expect = double(lv) * cfg.nominal_voltage;
        double tol = std::abs(double(lv)) * cfg.nominal_voltage *
                         (conv.max_spread_fraction() + 0.01) +
                     1e-9;
        CHECK(std::abs(conv.output_voltage() - expect) <= tol);
    }
}
