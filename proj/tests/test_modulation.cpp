#include <doctest.h>

#include <numeric>
#include <random>

#include "wbsim/lut_synth.hpp"
#include "wbsim/modulation.hpp"

using namespace wbsim;

namespace {
const QFormat kFmt(18, 14);

FixedValue fv(double x) { return quantize(x, kFmt).value; }
}  // namespace

TEST_CASE("plain nlm examples") {
    ModulationParams p7{1.0, 7};
    CHECK(nlm(fv(0.0), p7) == 0);
    CHECK(nlm(fv(0.95), p7) == 7);  // round(6.65)
    CHECK(nlm(fv(-0.5), {0.5, 7}) == -2);  // round(-1.75)
    CHECK(nlm(fv(1.0), p7) == 7);
    CHECK(nlm(fv(-1.0), p7) == -7);
    CHECK_THROWS_AS(nlm(fv(0.5), {1.5, 7}), std::invalid_argument);
    CHECK_THROWS_AS(nlm(fv(0.5), {0.5, 0}), std::invalid_argument);
}

TEST_CASE("adaptive cycle forces a zero sum through the last command") {
    // plain cycle [3,5,3,0,-3,-5,-4] sums to -1; the correction replaces the
    // last command with -(3+5+3+0-3-5) = -3
    std::vector<double> reals = {3.0 / 7, 5.0 / 7, 3.0 / 7, 0.0, -3.0 / 7, -5.0 / 7, -4.0 / 7};
    std::vector<std::int64_t> raws;
    for (double r : reals) raws.push_back(fv(r).raw);
    ModulationParams p{1.0, 7};
    auto plain = NlmModulator(p, kFmt);
    std::vector<int> plain_levels;
    for (auto r : raws) plain_levels.push_back(plain.level_for(r));
    CHECK(plain_levels == std::vector<int>{3, 5, 3, 0, -3, -5, -4});

    auto res = nlm_adaptive_cycle(raws, p, kFmt);
    CHECK(res.levels == std::vector<int>{3, 5, 3, 0, -3, -5, -3});
    CHECK(std::accumulate(res.levels.begin(), res.levels.end(), 0) == 0);
    CHECK_FALSE(res.clamped);
    CHECK(res.residual_out == 0);
}

TEST_CASE("adaptive output is identical to plain nlm when the cycle already balances") {
    LutTable table = build_sine_table(1024, kFmt);
    auto timing = derive_timing({5e6, 100e6}, 1024, kFmt);
    auto cyc = synthesize_cycle(initial_address(LutMethod::Improved, timing), timing, table);
    ModulationParams p{1.0, 7};
    NlmModulator plain(p, kFmt);
    std::vector<int> plain_levels;
    for (auto r : cyc.sample_raws) plain_levels.push_back(plain.level_for(r));
    CHECK(std::accumulate(plain_levels.begin(), plain_levels.end(), 0) == 0);
    auto res = nlm_adaptive_cycle(cyc.sample_raws, p, kFmt);
    CHECK(res.levels == plain_levels);
}

TEST_CASE("adaptive differs from plain in at most the last sample of each cycle") {
    LutTable table = build_sine_table(1024, kFmt);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> fo(1e5, 5e7);
    std::uniform_real_distribution<double> mdist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        CycleTiming t;
        try {
            t = derive_timing({fo(rng), 1e8}, 1024, kFmt);
        } catch (const std::invalid_argument&) {
            continue;
        }
        auto cyc = synthesize_cycle(initial_address(LutMethod::Improved, t), t, table);
        ModulationParams p{mdist(rng), 7};
        NlmModulator plain(p, kFmt);
        auto res = nlm_adaptive_cycle(cyc.sample_raws, p, kFmt);
        std::int64_t sum = std::accumulate(res.levels.begin(), res.levels.end(),
                                           std::int64_t{0});
        if (!res.clamped) CHECK(sum == 0);
        for (std::size_t k = 0; k + 1 < res.levels.size(); ++k)
            CHECK(res.levels[k] == plain.level_for(cyc.sample_raws[k]));
    }
}

TEST_CASE("clamped corrections carry the residual into the next cycle") {
    // artificial all-positive 'cycle' forces a correction beyond the bound
    std::vector<std::int64_t> raws(5, fv(1.0).raw);
    NlmModulator plain({1.0, 7}, kFmt);
    AdaptiveNlm mod(plain);
    std::vector<int> out;
    mod.modulate_cycle(raws, out);
    CHECK(out == std::vector<int>{7, 7, 7, 7, -7});  // wanted -28, clamped
    CHECK(mod.clamp_engagements() == 1);
    CHECK(mod.residual() == -21);

    // a balanced follow-up cycle absorbs the carried residual
    std::vector<std::int64_t> zeros(5, fv(0.0).raw);
    out.clear();
    mod.modulate_cycle(zeros, out);
    CHECK(out == std::vector<int>{0, 0, 0, 0, 7});  // wants +21, clamps at 7
    CHECK(mod.residual() == 14);
}

TEST_CASE("cycle_sums splits a stream into per-cycle totals") {
    std::vector<int> levels = {1, -1, 2, 3, -3, -2, 0, 0, 5};
    auto sums = cycle_sums(levels, 3);
    CHECK(sums == std::vector<std::int64_t>{2, -2, 5});
    CHECK_THROWS_AS(cycle_sums(levels, 0), std::invalid_argument);
}

TEST_CASE("modulation rejects K < 2 cycles") {
    std::vector<std::int64_t> one = {fv(0.5).raw};
    CHECK_THROWS_AS(nlm_adaptive_cycle(one, {1.0, 7}, kFmt), std::invalid_argument);
}
