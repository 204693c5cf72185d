#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "multitone.hpp"
#include "wbsim/fft.hpp"
#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// Frequency-division channel mixing: every channel is an improved-LUT tone
// at its own frequency, the sum is adaptively rounded to levels and driven
// through the converter. Interval FFTs document which channels are active.

namespace wbsim {

MixResult run_mix(const MixSpec& spec, const ConverterConfig& cc, const LoadModel& load,
                  const GlobalParams& gp, const std::filesystem::path& out_dir) {
    if (spec.plan.channels.empty()) throw std::invalid_argument("run_mix: empty channel plan");
    double f_min = 1e300;
    for (const auto& ch : spec.plan.channels) {
        if (ch.frequency_hz <= 0 || ch.frequency_hz > gp.f_clock_hz / 2.0)
            throw std::invalid_argument("run_mix: channel frequency outside (0, f_clock/2]");
        if (ch.amplitude_levels <= 0)
            throw std::invalid_argument("run_mix: channel amplitude must be positive");
        if (ch.t_start_s < 0 || ch.t_start_s >= ch.t_end_s || ch.t_end_s > spec.duration_s)
            throw std::invalid_argument("run_mix: bad channel interval");
        f_min = std::min(f_min, ch.frequency_hz);
    }

    // clipping check: at every plan segment the active amplitudes must fit
    // into the level budget
    MixResult result;
    {
        std::vector<double> edges;
        for (const auto& ch : spec.plan.channels) {
            edges.push_back(ch.t_start_s);
            edges.push_back(ch.t_end_s);
        }
        std::sort(edges.begin(), edges.end());
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            double mid = 0.5 * (edges[i] + edges[i + 1]);
            double sum = 0.0;
            for (const auto& ch : spec.plan.channels)
                if (ch.t_start_s <= mid && mid < ch.t_end_s) sum += ch.amplitude_levels;
            result.max_instant_level_sum = std::max(result.max_instant_level_sum, sum);
        }
        if (result.max_instant_level_sum > double(gp.n_levels) + 1e-9)
            throw std::invalid_argument(
                "run_mix: plan amplitudes sum to " +
                format_number(result.max_instant_level_sum) + " levels, exceeding " +
                std::to_string(gp.n_levels) + " (would clip)");
    }

    std::filesystem::create_directories(out_dir);
    LutTable table = build_sine_table(gp.lut_length, gp.qformat, gp.tie);
    CascadedConverter conv(cc, load, gp.f_clock_hz);
    double dt = 1.0 / gp.f_clock_hz;
    std::int64_t total_clocks = std::llround(spec.duration_s * gp.f_clock_hz);
    std::int64_t block = std::max<std::int64_t>(2, std::llround(gp.f_clock_hz / f_min));
    detail::BlockAdaptiveRounder rounder(gp.n_levels, block, gp.tie);

    struct Voice {
        std::int64_t start_clock, end_clock;
        detail::ToneVoice tone;
    };
    std::vector<Voice> voices;
    voices.reserve(spec.plan.channels.size());
    for (const auto& ch : spec.plan.channels) {
        CycleTiming t = derive_timing({ch.frequency_hz, gp.f_clock_hz}, gp.lut_length,
                                      gp.qformat, gp.tie);
        voices.push_back({std::llround(ch.t_start_s * gp.f_clock_hz),
                          std::llround(ch.t_end_s * gp.f_clock_hz),
                          detail::ToneVoice(table, t, ch.amplitude_levels, gp.address_mode)});
    }

    CsvWriter ts(out_dir / "mix_timeseries.csv");
    {
        std::vector<std::string> cols = {"time_s", "level", "v_out_V", "i_load_A"};
        for (int i = 1; i <= cc.n_modules; ++i)
            cols.push_back("module_" + std::to_string(i) + "_V");
        ts.header(cols);
    }

    std::vector<double> current_trace;
    current_trace.reserve(std::size_t(total_clocks));
    for (std::int64_t c = 0; c < total_clocks; ++c) {
        double ref = 0.0;
        for (auto& v : voices)
            if (c >= v.start_clock && c < v.end_clock) ref += v.tone.next_value();
        int lv = rounder.next(ref);
        conv.step(lv);
        current_trace.push_back(conv.load_current());
        if (c % spec.ts_decimation == 0) {
            ts.row_start();
            ts.field(double(c) * dt);
            ts.field(std::int64_t(lv));
            ts.field(conv.output_voltage());
            ts.field(conv.load_current());
            for (const auto& m : conv.modules()) ts.field(m.cap_voltage);
            ts.row_end();
        }
    }
    result.clamp_engagements = rounder.clamp_engagements();

    // lowest-channel fundamental amplitude over the full record
    {
        double w = 2.0 * std::numbers::pi * f_min / gp.f_clock_hz;
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < current_trace.size(); ++k) {
            re += current_trace[k] * std::cos(w * double(k));
            im -= current_trace[k] * std::sin(w * double(k));
        }
        double n = double(current_trace.size());
        result.fundamental_amplitude_a = 2.0 * std::hypot(re / n, im / n);
    }

    // interval FFTs of the current
    for (double t_instant : spec.fft_instants_s) {
        std::int64_t center = std::llround(t_instant * gp.f_clock_hz);
        std::int64_t half = spec.fft_window / 2;
        std::int64_t start = std::clamp<std::int64_t>(center - half, 0,
                                                      total_clocks - spec.fft_window);
        std::vector<double> seg(std::size_t(spec.fft_window));
        auto win = hann_window(seg.size());
        double wsum = 0.0;
        for (double v : win) wsum += v;
        for (std::size_t i = 0; i < seg.size(); ++i)
            seg[i] = current_trace[std::size_t(start) + i] * win[i];
        auto bins = rfft(seg, next_pow2(seg.size()));
        double bin_hz = gp.f_clock_hz / double(next_pow2(seg.size()));
        CsvWriter f_csv(out_dir / ("mix_fft_" +
                                   std::to_string(std::llround(t_instant * 1e6)) + "us.csv"));
        f_csv.header({"frequency_Hz", "magnitude"});
        for (std::size_t b = 0; b < bins.size() && double(b) * bin_hz <= 6e6; ++b) {
            f_csv.row_start();
            f_csv.field(double(b) * bin_hz);
            f_csv.field(2.0 * std::abs(bins[b]) / wsum);
            f_csv.row_end();
        }
    }

    WaveformRecord rec{gp.f_clock_hz, 0.0, std::move(current_trace)};
    auto spec_mat = spectrogram(rec, spec.spectrogram_window, spec.spectrogram_hop);
    write_spectrogram_csv(spec_mat, out_dir / "mix_spectrogram.csv", 6e6);
    write_spectrogram_pgm(spec_mat, out_dir / "mix_spectrogram.pgm", 6e6);

    std::ofstream summary(out_dir / "mix_summary.txt", std::ios::binary);
    summary << "channel mixing, " << spec.plan.channels.size() << " channels, "
            << format_number(spec.duration_s) << " s\n";
    for (const auto& ch : spec.plan.channels)
        summary << "  " << format_number(ch.frequency_hz) << " Hz amp "
                << format_number(ch.amplitude_levels) << " levels, "
                << format_number(ch.t_start_s) << " .. " << format_number(ch.t_end_s) << " s\n";
    summary << "max_instant_level_sum: " << format_number(result.max_instant_level_sum)
            << "\n";
    summary << "lowest_channel_current_amplitude_A: "
            << format_number(result.fundamental_amplitude_a) << "\n";
    summary << "adaptive_clamp_engagements: " << result.clamp_engagements << "\n";
    summary << "max_module_spread_fraction: " << format_number(conv.max_spread_fraction())
            << "\n";
    return result;
}

}  // namespace wbsim
