#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wbsim/fixedpoint.hpp"

// Nearest-level modulation of fixed-point reference samples, plus the
// adaptive variant that forces each output cycle's command sum to zero by
// deciding the last command from the cycle accumulator.

namespace wbsim {

struct ModulationParams {
    double modulation_factor = 1.0;  // m, 0..1
    int n_levels = 7;                // maximum level magnitude
};

// Plain NLM of a single sample. The gain m*n_levels is itself held in the
// controller format; the product of two fixed-point numbers is exact in a
// double, so the rounding below reproduces the hardware multiply-round.
int nlm(const FixedValue& sample, const ModulationParams& p,
        TieRule tie = TieRule::AwayFromZero);

class NlmModulator {
  public:
    NlmModulator(const ModulationParams& p, const QFormat& fmt,
                 TieRule tie = TieRule::AwayFromZero);

    int level_for(std::int64_t sample_raw) const;
    const ModulationParams& params() const { return params_; }
    TieRule tie() const { return tie_; }

  private:
    ModulationParams params_;
    TieRule tie_;
    double gain_real_;  // quantized m*n_levels
    int sample_frac_bits_;
};

struct AdaptiveCycleResult {
    std::vector<int> levels;
    bool clamped = false;            // correction exceeded the level bound
    std::int64_t residual_out = 0;   // uncorrected remainder carried forward
};

// One-shot form of the adaptive cycle (Fig. 3 behavior with zero incoming
// residual): commands 0..K-2 are plain NLM, the last command is the negated
// running sum, clamped to the level bound.
AdaptiveCycleResult nlm_adaptive_cycle(std::span<const std::int64_t> sample_raws,
                                       const ModulationParams& p, const QFormat& fmt,
                                       TieRule tie = TieRule::AwayFromZero);

// Streaming adaptive modulator. Keeps the clamp residual across cycles so the
// long-run mean stays zero even when a correction had to be clamped.
class AdaptiveNlm {
  public:
    AdaptiveNlm(const NlmModulator& nlm) : nlm_(nlm) {}

    // Appends K levels for one complete cycle.
    void modulate_cycle(std::span<const std::int64_t> sample_raws, std::vector<int>& out);

    std::int64_t clamp_engagements() const { return clamp_engagements_; }
    std::int64_t residual() const { return residual_; }

  private:
    NlmModulator nlm_;
    std::int64_t residual_ = 0;
    std::int64_t clamp_engagements_ = 0;
};

// Per-cycle sums of a level stream (K commands per cycle).
std::vector<std::int64_t> cycle_sums(std::span<const int> levels, std::int64_t clocks_per_cycle);

}  // namespace wbsim
