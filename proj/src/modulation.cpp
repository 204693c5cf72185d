#include "wbsim/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wbsim {

NlmModulator::NlmModulator(const ModulationParams& p, const QFormat& fmt, TieRule tie)
    : params_(p), tie_(tie), sample_frac_bits_(fmt.frac_bits) {
    if (p.modulation_factor < 0.0 || p.modulation_factor > 1.0)
        throw std::invalid_argument("NlmModulator: modulation factor outside [0,1]");
    if (p.n_levels < 1) throw std::invalid_argument("NlmModulator: n_levels must be >= 1");
    gain_real_ = quantize(p.modulation_factor * p.n_levels, fmt, tie).value.to_double();
}

int NlmModulator::level_for(std::int64_t sample_raw) const {
    double product = std::ldexp(double(sample_raw), -sample_frac_bits_) * gain_real_;
    double r = round_real(product, tie_);
    int n = params_.n_levels;
    return int(std::clamp(r, double(-n), double(n)));
}

int nlm(const FixedValue& sample, const ModulationParams& p, TieRule tie) {
    return NlmModulator(p, sample.format, tie).level_for(sample.raw);
}

void AdaptiveNlm::modulate_cycle(std::span<const std::int64_t> sample_raws,
                                 std::vector<int>& out) {
    std::size_t k_count = sample_raws.size();
    if (k_count < 2) throw std::invalid_argument("AdaptiveNlm: cycle needs K >= 2");
    std::int64_t running = residual_;
    for (std::size_t k = 0; k + 1 < k_count; ++k) {
        int lv = nlm_.level_for(sample_raws[k]);
        running += lv;
        out.push_back(lv);
    }
    // Fig. 3: the accumulator is compared with zero at the end of the cycle
    // and the difference decides the last command.
    std::int64_t want = -running;
    int n = nlm_.params().n_levels;
    std::int64_t got = std::clamp<std::int64_t>(want, -n, n);
    if (got != want) ++clamp_engagements_;
    residual_ = want - got;
    out.push_back(int(got));
}

AdaptiveCycleResult nlm_adaptive_cycle(std::span<const std::int64_t> sample_raws,
                                       const ModulationParams& p, const QFormat& fmt,
                                       TieRule tie) {
    AdaptiveNlm mod(NlmModulator(p, fmt, tie));
    AdaptiveCycleResult r;
    r.levels.reserve(sample_raws.size());
    mod.modulate_cycle(sample_raws, r.levels);
    r.clamped = mod.clamp_engagements() > 0;
    r.residual_out = mod.residual();
    return r;
}

std::vector<std::int64_t> cycle_sums(std::span<const int> levels,
                                     std::int64_t clocks_per_cycle) {
    if (clocks_per_cycle <= 0) throw std::invalid_argument("cycle_sums: bad cycle length");
    std::size_t k = std::size_t(clocks_per_cycle);
    std::vector<std::int64_t> sums;
    sums.reserve(levels.size() / k);
    for (std::size_t base = 0; base + k <= levels.size(); base += k) {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < k; ++i) s += levels[base + i];
        sums.push_back(s);
    }
    return sums;
}

}  // namespace wbsim
