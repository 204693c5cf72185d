#include <algorithm>
#include <cmath>
#include <fstream>

#include "multitone.hpp"
#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// Spectrogram message: one frequency channel per bitmap row, one time column
// per bitmap column. The decoder thresholds per-channel spectrogram energy at
// half the channel's strongest column (the midpoint of the on/off clusters,
// the off cluster being leakage-level), with an absolute floor so silent
// channels decode to zeros.

namespace wbsim {

namespace {

constexpr double kDecodeFloor = 1e-3;  // amperes; below this a channel is off

}  // namespace

MessageResult run_message(const MessageSpec& spec, const ConverterConfig& cc,
                          const LoadModel& load, const GlobalParams& gp,
                          const std::filesystem::path& out_dir) {
    if (spec.bitmap.empty() || spec.bitmap.front().empty())
        throw std::invalid_argument("run_message: empty bitmap");
    std::size_t rows = spec.bitmap.size();
    std::size_t cols = spec.bitmap.front().size();
    for (const auto& r : spec.bitmap)
        if (r.size() != cols) throw std::invalid_argument("run_message: ragged bitmap");

    std::vector<double> channels = spec.channel_frequencies;
    if (channels.empty()) {
        channels.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) channels[i] = 50e3 * double(i + 1);
    }
    if (channels.size() != rows)
        throw std::invalid_argument("run_message: channel count must equal bitmap rows");
    double f_min = 1e300, f_max = 0.0, spacing = 1e300;
    {
        std::vector<double> sorted = channels;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] <= 0 || sorted[i] > gp.f_clock_hz / 2.0)
                throw std::invalid_argument("run_message: channel outside (0, f_clock/2]");
            if (i > 0) spacing = std::min(spacing, sorted[i] - sorted[i - 1]);
        }
        f_min = sorted.front();
        f_max = sorted.back();
    }
    if (rows > 1) {
        // need ~4 bins between adjacent channels to separate Hann main lobes
        int required = int(std::ceil(4.0 * gp.f_clock_hz / spacing));
        if (spec.spectrogram_window < required)
            throw std::invalid_argument(
                "run_message: channel spacing below spectrogram resolution; "
                "need window length >= " +
                std::to_string(required));
    }

    std::filesystem::create_directories(out_dir);
    LutTable table = build_sine_table(gp.lut_length, gp.qformat, gp.tie);
    CascadedConverter conv(cc, load, gp.f_clock_hz);
    double dt = 1.0 / gp.f_clock_hz;
    std::int64_t col_clocks = std::llround(spec.column_duration_s * gp.f_clock_hz);
    std::int64_t block = std::max<std::int64_t>(2, std::llround(gp.f_clock_hz / f_min));
    detail::BlockAdaptiveRounder rounder(gp.n_levels, block, gp.tie);
    double amplitude = double(gp.n_levels) / double(rows);  // worst-case column fits exactly

    CsvWriter ts(out_dir / "message_timeseries.csv");
    {
        std::vector<std::string> hdr = {"time_s", "level", "v_out_V", "i_load_A"};
        ts.header(hdr);
    }

    std::vector<double> current_trace;
    current_trace.reserve(std::size_t(col_clocks) * cols);
    std::vector<detail::ToneVoice> voices;
    for (std::size_t c = 0; c < cols; ++c) {
        voices.clear();
        for (std::size_t r = 0; r < rows; ++r) {
            if (!spec.bitmap[r][c]) continue;
            CycleTiming t = derive_timing({channels[r], gp.f_clock_hz}, gp.lut_length,
                                          gp.qformat, gp.tie);
            voices.emplace_back(table, t, amplitude, gp.address_mode);
        }
        for (std::int64_t j = 0; j < col_clocks; ++j) {
            double ref = 0.0;
            for (auto& v : voices) ref += v.next_value();
            int lv = rounder.next(ref);
            conv.step(lv);
            current_trace.push_back(conv.load_current());
            std::int64_t clock = std::int64_t(c) * col_clocks + j;
            if (clock % spec.ts_decimation == 0) {
                ts.row_start();
                ts.field(double(clock) * dt);
                ts.field(std::int64_t(lv));
                ts.field(conv.output_voltage());
                ts.field(conv.load_current());
                ts.row_end();
            }
        }
    }

    WaveformRecord rec{gp.f_clock_hz, 0.0, std::move(current_trace)};
    auto spec_mat = spectrogram(rec, spec.spectrogram_window, spec.spectrogram_hop);
    double bin_hz = spec_mat.frequencies[1];

    // per (channel, column) energy: mean linear magnitude over frames fully
    // inside the column, bins within 1.5 bins of the channel frequency
    MessageResult result;
    std::vector<std::vector<double>> energy(rows, std::vector<double>(cols, 0.0));
    std::vector<int> frame_counts(cols, 0);
    double half_win_s = 0.5 * double(spec.spectrogram_window) / gp.f_clock_hz;
    for (std::size_t fr = 0; fr < spec_mat.times.size(); ++fr) {
        double t0 = spec_mat.times[fr] - half_win_s;
        double t1 = spec_mat.times[fr] + half_win_s;
        std::int64_t col = std::int64_t(t0 / spec.column_duration_s + 1e-9);
        if (col < 0 || col >= std::int64_t(cols)) continue;
        if (t1 > double(col + 1) * spec.column_duration_s + 1e-12) continue;  // straddles
        ++frame_counts[std::size_t(col)];
        for (std::size_t r = 0; r < rows; ++r) {
            double center = channels[r] / bin_hz;
            std::size_t b_lo = std::size_t(std::max(0.0, std::ceil(center - 1.5)));
            std::size_t b_hi = std::size_t(center + 1.5);
            double acc = 0.0;
            for (std::size_t b = b_lo; b <= b_hi && b < spec_mat.frequencies.size(); ++b)
                acc += std::pow(10.0, spec_mat.magnitudes_db[fr][b] / 20.0);
            energy[r][std::size_t(col)] += acc;
        }
    }
    for (std::size_t c = 0; c < cols; ++c)
        if (frame_counts[c] > 0)
            for (std::size_t r = 0; r < rows; ++r) energy[r][c] /= double(frame_counts[c]);

    result.decoded.assign(rows, std::vector<int>(cols, 0));
    for (std::size_t r = 0; r < rows; ++r) {
        double on_level = *std::max_element(energy[r].begin(), energy[r].end());
        if (on_level < kDecodeFloor) continue;  // channel never transmitted
        double threshold = 0.5 * on_level;
        for (std::size_t c = 0; c < cols; ++c)
            result.decoded[r][c] = energy[r][c] > threshold ? 1 : 0;
    }

    result.total_pixels = std::int64_t(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (result.decoded[r][c] != spec.bitmap[r][c]) ++result.wrong_pixels;
    result.pixel_accuracy =
        1.0 - double(result.wrong_pixels) / double(result.total_pixels);

    write_bitmap(result.decoded, out_dir / "message_decoded.txt");
    write_spectrogram_csv(spec_mat, out_dir / "message_spectrogram.csv", f_max + 3 * bin_hz);
    write_spectrogram_pgm(spec_mat, out_dir / "message_spectrogram.pgm", f_max + 3 * bin_hz);

    std::ofstream summary(out_dir / "message_summary.txt", std::ios::binary);
    summary << "spectrogram message: " << rows << " channels x " << cols << " columns, "
            << format_number(spec.column_duration_s) << " s/column\n";
    summary << "channel_amplitude_levels: " << format_number(amplitude) << "\n";
    summary << "pixel_accuracy: " << format_number(result.pixel_accuracy) << "\n";
    summary << "wrong_pixels: " << result.wrong_pixels << " of " << result.total_pixels
            << "\n";
    summary << "adaptive_clamp_engagements: " << rounder.clamp_engagements() << "\n";
    return result;
}

}  // namespace wbsim
