#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wbsim/fixedpoint.hpp"

// Look-up-table sinusoid synthesis at controller clock rate.
//
// Three addressing strategies are implemented:
//   Conventional   - every output cycle starts at address 0,
//   ErrorInherited - the next cycle continues from where the previous one
//                    stopped (a degraded phase accumulator),
//   Improved       - a per-frequency initial address centers each cycle on
//                    the table midpoint so the visited values cancel pairwise.
//
// Addresses are fixed point. The increment keeps the configured fractional
// resolution; the accumulator carries one extra fractional bit so the
// improved method's half-step initial address is exact.

namespace wbsim {

enum class LutMethod { Conventional, ErrorInherited, Improved };

enum class AddressMode {
    RoundNearest,  // default; preserves symmetric address pairs
    Truncate,      // classic phase-truncation behavior, much stronger bias
};

struct LutTable {
    int length = 0;
    QFormat format;
    std::vector<std::int64_t> sample_raws;

    double sample(int index) const {
        return std::ldexp(double(sample_raws[index]), -format.frac_bits);
    }
};

// Table of quantize(sin(2*pi*i/L)). L must be even and >= 4 so the odd
// half-wave symmetry sample[i + L/2] == -sample[i] holds exactly.
LutTable build_sine_table(int length, const QFormat& fmt,
                          TieRule tie = TieRule::AwayFromZero);

struct SynthParams {
    double f_objective_hz = 0.0;
    double f_clock_hz = 0.0;
};

struct CycleTiming {
    int table_length = 0;
    std::int64_t delta_a_raw = 0;  // address increment, scaled by 2^frac_bits
    int frac_bits = 0;
    std::int64_t clocks_per_cycle = 0;  // K
    double f_clock_hz = 0.0;

    int addr_frac_bits() const { return frac_bits + 1; }
    double delta_a() const { return std::ldexp(double(delta_a_raw), -frac_bits); }
    // K*dA - L, exact in raw units
    std::int64_t drift_raw() const {
        return clocks_per_cycle * delta_a_raw -
               (std::int64_t(table_length) << frac_bits);
    }
    double drift_per_cycle() const { return std::ldexp(double(drift_raw()), -frac_bits); }
    // Frequency actually produced by the address increment.
    double tone_hz() const { return f_clock_hz * delta_a() / table_length; }
    // Cycle repetition rate f_clock/K; the methods that reuse the same
    // initial address every cycle are exactly periodic at this frequency.
    double cycle_hz() const { return f_clock_hz / double(clocks_per_cycle); }
};

// dA = L*f_o/f_clock quantized to the configured fractional resolution,
// K = round(L/dA). Rejects f_o outside (0, f_clock/2] and increments that
// quantize to zero.
CycleTiming derive_timing(const SynthParams& p, int table_length, const QFormat& fmt,
                          TieRule tie = TieRule::AwayFromZero);

// Initial address of one output cycle, in accumulator raw units
// (frac_bits + 1 fractional bits), reduced into [0, L).
// prev_end_raw is the previous cycle's last address (required by the
// error-inherited method after the first cycle).
std::int64_t initial_address(LutMethod method, const CycleTiming& t,
                             std::optional<std::int64_t> prev_end_raw = std::nullopt);

struct CycleSamples {
    std::vector<std::int64_t> sample_raws;  // K entries, table format
    std::int64_t final_address_raw = 0;     // last visited address
};

// Table addresses of one cycle, pre index rounding, in accumulator raw units.
std::vector<std::int64_t> cycle_addresses(std::int64_t a0_raw, const CycleTiming& t);

CycleSamples synthesize_cycle(std::int64_t a0_raw, const CycleTiming& t,
                              const LutTable& table,
                              AddressMode mode = AddressMode::RoundNearest);

struct LfPrediction {
    bool oscillates = false;
    double eq_value = 0.0;      // dA / (L - K*dA), dimensionless
    double frequency_hz = 0.0;  // f_clock * |L - K*dA| / (L*K)
};

// Predicted subharmonic of the error-inherited method. Exact division
// (K*dA == L) yields a no-oscillation result.
LfPrediction predict_lf_oscillation(const CycleTiming& t);

// Streaming synthesizer; chains cycles for the error-inherited method.
class ReferenceSynth {
  public:
    ReferenceSynth(const LutTable& table, const CycleTiming& timing, LutMethod method,
                   AddressMode mode = AddressMode::RoundNearest);

    // Appends exactly K sample raws.
    void next_cycle(std::vector<std::int64_t>& out);
    std::int64_t cycles_produced() const { return cycle_index_; }
    const CycleTiming& timing() const { return timing_; }

  private:
    const LutTable* table_;
    CycleTiming timing_;
    LutMethod method_;
    AddressMode mode_;
    std::int64_t next_a0_raw_ = 0;
    std::int64_t cycle_index_ = 0;
};

}  // namespace wbsim
