#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wbsim/lut_synth.hpp"
#include "wbsim/modulation.hpp"

// Internal helpers shared by the mix and message runners: per-channel
// improved-LUT voices summed at the controller clock, and a block-wise
// adaptive rounder that zeroes the accumulated command sum at the end of
// each block (one cycle of the lowest active frequency).

namespace wbsim::detail {

class ToneVoice {
  public:
    ToneVoice(const LutTable& table, const CycleTiming& timing, double amplitude_levels,
              AddressMode mode)
        : synth_(table, timing, LutMethod::Improved, mode),
          amplitude_(amplitude_levels),
          frac_bits_(table.format.frac_bits) {}

    double next_value() {
        if (pos_ == buf_.size()) {
            buf_.clear();
            synth_.next_cycle(buf_);
            pos_ = 0;
        }
        return amplitude_ * std::ldexp(double(buf_[pos_++]), -frac_bits_);
    }

  private:
    ReferenceSynth synth_;
    std::vector<std::int64_t> buf_;
    std::size_t pos_ = 0;
    double amplitude_;
    int frac_bits_;
};

class BlockAdaptiveRounder {
  public:
    BlockAdaptiveRounder(int n_levels, std::int64_t block_clocks, TieRule tie)
        : n_(n_levels), block_(block_clocks), tie_(tie) {}

    int next(double reference_levels) {
        int lv;
        if (pos_ < block_ - 1) {
            double r = round_real(reference_levels, tie_);
            r = std::min(std::max(r, double(-n_)), double(n_));
            lv = int(r);
            running_ += lv;
        } else {
            std::int64_t want = -running_;
            std::int64_t got = want;
            if (got > n_) got = n_;
            if (got < -n_) got = -n_;
            if (got != want) ++clamps_;
            lv = int(got);
            running_ = want - got;  // residual seeds the next block
        }
        if (++pos_ == block_) pos_ = 0;
        return lv;
    }

    std::int64_t clamp_engagements() const { return clamps_; }

  private:
    int n_;
    std::int64_t block_;
    TieRule tie_;
    std::int64_t pos_ = 0;
    std::int64_t running_ = 0;
    std::int64_t clamps_ = 0;
};

}  // namespace wbsim::detail
