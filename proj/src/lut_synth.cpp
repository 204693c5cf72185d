#include "wbsim/lut_synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wbsim {

LutTable build_sine_table(int length, const QFormat& fmt, TieRule tie) {
    if (length < 4 || length % 2 != 0)
        throw std::invalid_argument("build_sine_table: length must be even and >= 4");
    LutTable t;
    t.length = length;
    t.format = fmt;
    t.sample_raws.resize(length);
    for (int i = 0; i < length; ++i) {
        double phase = 2.0 * std::numbers::pi * double(i) / double(length);
        t.sample_raws[i] = quantize(std::sin(phase), fmt, tie).value.raw;
    }
    return t;
}

CycleTiming derive_timing(const SynthParams& p, int table_length, const QFormat& fmt,
                          TieRule tie) {
    if (p.f_clock_hz <= 0.0) throw std::invalid_argument("derive_timing: f_clock must be > 0");
    if (p.f_objective_hz <= 0.0 || p.f_objective_hz > p.f_clock_hz / 2.0)
        throw std::invalid_argument("derive_timing: need 0 < f_o <= f_clock/2");
    if (table_length < 4 || table_length % 2 != 0)
        throw std::invalid_argument("derive_timing: table length must be even and >= 4");

    CycleTiming t;
    t.table_length = table_length;
    t.frac_bits = fmt.frac_bits;
    t.f_clock_hz = p.f_clock_hz;

    // The increment register keeps the sample format's fractional resolution
    // but is widened to cover the table index range.
    int index_bits = 1;
    while ((1 << index_bits) < table_length) ++index_bits;
    QFormat addr_fmt(fmt.frac_bits + index_bits + 2, fmt.frac_bits);
    double da = double(table_length) * p.f_objective_hz / p.f_clock_hz;
    t.delta_a_raw = quantize(da, addr_fmt, tie).value.raw;
    if (t.delta_a_raw <= 0)
        throw std::invalid_argument("derive_timing: objective frequency below address resolution");

    // K = round(L/dA), tie away from zero, in exact integer arithmetic.
    std::int64_t num = std::int64_t(table_length) << fmt.frac_bits;
    std::int64_t q = num / t.delta_a_raw;
    std::int64_t rem = num % t.delta_a_raw;
    t.clocks_per_cycle = q + (2 * rem >= t.delta_a_raw ? 1 : 0);
    if (t.clocks_per_cycle < 2)
        throw std::invalid_argument("derive_timing: fewer than 2 clocks per output cycle");
    return t;
}

std::int64_t initial_address(LutMethod method, const CycleTiming& t,
                             std::optional<std::int64_t> prev_end_raw) {
    std::int64_t l_raw = std::int64_t(t.table_length) << t.addr_frac_bits();
    switch (method) {
        case LutMethod::Conventional:
            return 0;
        case LutMethod::ErrorInherited: {
            if (!prev_end_raw) return 0;  // first cycle
            std::int64_t a = (*prev_end_raw + (t.delta_a_raw << 1)) - l_raw;
            a %= l_raw;
            if (a < 0) a += l_raw;
            return a;
        }
        case LutMethod::Improved: {
            // A0 = L/2 - (K-1)/2 * dA; exact thanks to the extra fractional bit:
            // L/2 at frac+1 is L<<frac, ((K-1)/2)*dA at frac+1 is (K-1)*delta_a_raw.
            std::int64_t a0 = (std::int64_t(t.table_length) << t.frac_bits) -
                              (t.clocks_per_cycle - 1) * t.delta_a_raw;
            a0 %= l_raw;
            if (a0 < 0) a0 += l_raw;
            return a0;
        }
    }
    return 0;
}

std::vector<std::int64_t> cycle_addresses(std::int64_t a0_raw, const CycleTiming& t) {
    std::int64_t l_raw = std::int64_t(t.table_length) << t.addr_frac_bits();
    std::int64_t da = t.delta_a_raw << 1;
    std::vector<std::int64_t> addrs(std::size_t(t.clocks_per_cycle));
    std::int64_t a = a0_raw % l_raw;
    if (a < 0) a += l_raw;
    for (auto& out : addrs) {
        out = a;
        a += da;
        if (a >= l_raw) a -= l_raw;
    }
    return addrs;
}

CycleSamples synthesize_cycle(std::int64_t a0_raw, const CycleTiming& t,
                              const LutTable& table, AddressMode mode) {
    if (table.length != t.table_length)
        throw std::invalid_argument("synthesize_cycle: table length mismatch");
    std::int64_t l_raw = std::int64_t(t.table_length) << t.addr_frac_bits();
    std::int64_t da = t.delta_a_raw << 1;
    std::int64_t half = std::int64_t(1) << (t.addr_frac_bits() - 1);
    CycleSamples out;
    out.sample_raws.resize(std::size_t(t.clocks_per_cycle));
    std::int64_t a = a0_raw % l_raw;
    if (a < 0) a += l_raw;
    for (auto& s : out.sample_raws) {
        std::int64_t idx = mode == AddressMode::RoundNearest
                               ? ((a + half) >> t.addr_frac_bits()) % t.table_length
                               : (a >> t.addr_frac_bits()) % t.table_length;
        s = table.sample_raws[std::size_t(idx)];
        out.final_address_raw = a;
        a += da;
        if (a >= l_raw) a -= l_raw;
    }
    return out;
}

LfPrediction predict_lf_oscillation(const CycleTiming& t) {
    LfPrediction p;
    std::int64_t drift = t.drift_raw();
    if (drift == 0) return p;  // exact division, no oscillation
    p.oscillates = true;
    double l = double(t.table_length);
    double k = double(t.clocks_per_cycle);
    p.eq_value = t.delta_a() / (l - k * t.delta_a());
    p.frequency_hz = t.f_clock_hz * std::abs(t.drift_per_cycle()) / (l * k);
    return p;
}

ReferenceSynth::ReferenceSynth(const LutTable& table, const CycleTiming& timing,
                               LutMethod method, AddressMode mode)
    : table_(&table), timing_(timing), method_(method), mode_(mode) {
    next_a0_raw_ = initial_address(method, timing);
}

void ReferenceSynth::next_cycle(std::vector<std::int64_t>& out) {
    CycleSamples c = synthesize_cycle(next_a0_raw_, timing_, *table_, mode_);
    out.insert(out.end(), c.sample_raws.begin(), c.sample_raws.end());
    ++cycle_index_;
    switch (method_) {
        case LutMethod::Conventional:
            next_a0_raw_ = 0;
            break;
        case LutMethod::ErrorInherited:
            next_a0_raw_ = initial_address(method_, timing_, c.final_address_raw);
            break;
        case LutMethod::Improved:
            break;  // same initial address every cycle
    }
}

}  // namespace wbsim
