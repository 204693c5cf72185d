#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "wbsim/lut_synth.hpp"

using namespace wbsim;

namespace {
const QFormat kFmt(18, 14);
const double kClock = 100e6;

CycleTiming timing_for(double f_o, int length = 1024) {
    return derive_timing({f_o, kClock}, length, kFmt);
}
}  // namespace

TEST_CASE("sine table quarter-wave values and symmetry") {
    LutTable t4 = build_sine_table(4, kFmt);
    CHECK(t4.sample_raws[0] == 0);
    CHECK(t4.sample_raws[1] == 16384);
    CHECK(t4.sample_raws[2] == 0);
    CHECK(t4.sample_raws[3] == -16384);

    LutTable t = build_sine_table(1024, kFmt);
    CHECK(t.sample_raws[256] == 16384);  // sin(pi/2) exactly representable
    for (int i = 0; i < t.length; ++i)
        CHECK(t.sample_raws[i] + t.sample_raws[(i + t.length / 2) % t.length] == 0);

    CHECK_THROWS_AS(build_sine_table(3, kFmt), std::invalid_argument);
    CHECK_THROWS_AS(build_sine_table(2, kFmt), std::invalid_argument);
    CHECK_THROWS_AS(build_sine_table(1023, kFmt), std::invalid_argument);
}

TEST_CASE("timing derivation matches the address-increment relation") {
    auto t = timing_for(25e6);
    CHECK(t.delta_a() == 256.0);
    CHECK(t.clocks_per_cycle == 4);

    t = timing_for(5e6);
    CHECK(t.delta_a_raw == 838861);  // 51.2 quantized to 14 fractional bits
    CHECK(t.delta_a() == doctest::Approx(51.2).epsilon(1e-6));
    CHECK(t.clocks_per_cycle == 20);

    t = timing_for(4.9e6);
    CHECK(t.delta_a_raw == 822084);
    CHECK(t.delta_a() == doctest::Approx(50.176).epsilon(1e-6));
    CHECK(t.clocks_per_cycle == 20);

    CHECK_THROWS_AS(timing_for(51e6), std::invalid_argument);   // above f_clock/2
    CHECK_THROWS_AS(timing_for(0.0), std::invalid_argument);
    CHECK_THROWS_AS(timing_for(0.1), std::invalid_argument);    // below resolution
}

TEST_CASE("initial addresses per method") {
    auto t5 = timing_for(5e6);
    CHECK(initial_address(LutMethod::Conventional, t5) == 0);

    // inherited: (1020.8 + 51.2) - 1024 = 48
    std::int64_t prev = std::llround(1020.8 * std::ldexp(1.0, t5.addr_frac_bits()));
    double a0 = std::ldexp(double(initial_address(LutMethod::ErrorInherited, t5, prev)),
                           -t5.addr_frac_bits());
    CHECK(a0 == doctest::Approx(48.0).epsilon(1e-4));

    // improved: 512 - 9.5*51.2 = 25.6
    double imp = std::ldexp(double(initial_address(LutMethod::Improved, t5)),
                            -t5.addr_frac_bits());
    CHECK(imp == doctest::Approx(25.6).epsilon(1e-4));
    CHECK(initial_address(LutMethod::Improved, t5) == 838857);

    // first inherited cycle starts at zero
    CHECK(initial_address(LutMethod::ErrorInherited, t5) == 0);
}

TEST_CASE("improved cycle addresses are pairwise symmetric around the table") {
    auto t = timing_for(5e6);
    auto addrs = cycle_addresses(initial_address(LutMethod::Improved, t), t);
    std::int64_t l_raw = std::int64_t(t.table_length) << t.addr_frac_bits();
    std::int64_t k = t.clocks_per_cycle;
    for (std::int64_t i = 0; i < k; ++i)
        CHECK((addrs[std::size_t(i)] + addrs[std::size_t(k - 1 - i)]) % l_raw == 0);
}

TEST_CASE("per-cycle sums: exact division cancels, non-exact conventional does not") {
    LutTable table = build_sine_table(1024, kFmt);
    auto sum_of = [&](LutMethod m, const CycleTiming& t, AddressMode mode) {
        auto c = synthesize_cycle(initial_address(m, t), t, table, mode);
        return std::accumulate(c.sample_raws.begin(), c.sample_raws.end(), std::int64_t{0});
    };

    auto t5 = timing_for(5e6);  // K*dA lands back on the table start
    CHECK(sum_of(LutMethod::Conventional, t5, AddressMode::RoundNearest) == 0);
    CHECK(sum_of(LutMethod::Improved, t5, AddressMode::RoundNearest) == 0);

    auto t49 = timing_for(4.9e6);  // truncated tail leaves a net accumulation
    CHECK(sum_of(LutMethod::Conventional, t49, AddressMode::RoundNearest) == 1416);
    CHECK(sum_of(LutMethod::Conventional, t49, AddressMode::Truncate) == 1548);
    CHECK(sum_of(LutMethod::Improved, t49, AddressMode::RoundNearest) == 0);
}

TEST_CASE("conventional method repeats the same cycle exactly") {
    LutTable table = build_sine_table(1024, kFmt);
    auto t = timing_for(4.9e6);
    ReferenceSynth synth(table, t, LutMethod::Conventional);
    std::vector<std::int64_t> a, b;
    synth.next_cycle(a);
    synth.next_cycle(b);
    CHECK(a == b);
}

TEST_CASE("inherited chaining equals continuous accumulation with zero long-run mean") {
    LutTable table = build_sine_table(1024, kFmt);
    auto t = timing_for(4.9e6);
    ReferenceSynth synth(table, t, LutMethod::ErrorInherited);
    std::vector<std::int64_t> raws;
    const int cycles = 2000;
    for (int c = 0; c < cycles; ++c) synth.next_cycle(raws);
    double mean = 0.0;
    for (auto r : raws) mean += double(r);
    mean /= double(raws.size()) * 16384.0;
    CHECK(std::abs(mean) < 1e-5);

    // successive initial addresses drift by K*dA - L each cycle
    auto a0_1 = initial_address(LutMethod::ErrorInherited, t,
                                synthesize_cycle(0, t, table).final_address_raw);
    std::int64_t l_raw = std::int64_t(t.table_length) << t.addr_frac_bits();
    std::int64_t expect = ((t.drift_raw() << 1) % l_raw + l_raw) % l_raw;
    CHECK(a0_1 == expect);
}

TEST_CASE("lf oscillation prediction") {
    auto t49 = timing_for(4.9e6);
    auto p = predict_lf_oscillation(t49);
    CHECK(p.oscillates);
    CHECK(p.eq_value == doctest::Approx(2.45).epsilon(1e-3));
    CHECK(p.frequency_hz == doctest::Approx(99997.5).epsilon(1e-4));

    auto t25 = timing_for(25e6);  // dA = 256, K = 4: exact division
    auto none = predict_lf_oscillation(t25);
    CHECK_FALSE(none.oscillates);
}

TEST_CASE("improved symmetry holds exactly for random configurations") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len_half(2, 4096);
    std::uniform_real_distribution<double> clk(1e6, 5e8);
    int tested = 0;
    while (tested < 200) {
        int length = 2 * len_half(rng);
        double f_clock = clk(rng);
        std::uniform_real_distribution<double> fo(f_clock / 5000.0, f_clock / 2.0);
        CycleTiming t;
        try {
            t = derive_timing({fo(rng), f_clock}, length, kFmt);
        } catch (const std::invalid_argument&) {
            continue;
        }
        auto addrs = cycle_addresses(initial_address(LutMethod::Improved, t), t);
        std::int64_t l_raw = std::int64_t(length) << t.addr_frac_bits();
        std::int64_t k = t.clocks_per_cycle;
        bool ok = true;
        for (std::int64_t i = 0; i < k && ok; ++i)
            ok = (addrs[std::size_t(i)] + addrs[std::size_t(k - 1 - i)]) % l_raw == 0;
        CHECK(ok);
        ++tested;
    }
}
