#include <algorithm>
#include <cmath>
#include <fstream>

#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// Exponential frequency sweep at full modulation through the converter.
// The sweep is stepped per output cycle: each cycle is synthesized with the
// improved LUT at the frequency given by the exponential law at the cycle
// start, so every distortion window is a constant-frequency staircase.

namespace wbsim {

namespace {

double window_spread_fraction(const CascadedConverter& conv) {
    double sum = 0.0;
    for (const auto& m : conv.modules()) sum += m.cap_voltage;
    double mean = sum / double(conv.modules().size());
    if (mean <= 0.0) return 0.0;
    double worst = 0.0;
    for (const auto& m : conv.modules())
        worst = std::max(worst, std::abs(m.cap_voltage - mean));
    return worst / mean;
}

}  // namespace

ChirpResult run_chirp(const ChirpSpec& spec, const ConverterConfig& cc, const LoadModel& load,
                      const GlobalParams& gp, const std::filesystem::path& out_dir) {
    if (spec.f_start_hz <= 0 || spec.f_start_hz >= spec.f_end_hz ||
        spec.f_end_hz > gp.f_clock_hz / 2.0)
        throw std::invalid_argument("run_chirp: need 0 < f_start < f_end <= f_clock/2");
    if (spec.duration_s <= 0) throw std::invalid_argument("run_chirp: duration must be > 0");

    std::filesystem::create_directories(out_dir);
    LutTable table = build_sine_table(gp.lut_length, gp.qformat, gp.tie);
    CascadedConverter conv(cc, load, gp.f_clock_hz);
    NlmModulator nlm({spec.modulation_factor, gp.n_levels}, gp.qformat, gp.tie);
    double dt = 1.0 / gp.f_clock_hz;
    double ratio = spec.f_end_hz / spec.f_start_hz;

    CsvWriter ts(out_dir / "chirp_timeseries.csv");
    {
        std::vector<std::string> cols = {"time_s", "level", "v_out_V", "i_load_A"};
        for (int i = 1; i <= cc.n_modules; ++i)
            cols.push_back("module_" + std::to_string(i) + "_V");
        ts.header(cols);
    }
    CsvWriter win_csv(out_dir / "chirp_windows.csv");
    win_csv.header({"t_start_s", "f_Hz", "distortion", "spread_fraction", "i_amplitude_A"});

    ChirpResult result;
    std::vector<double> current_trace;
    current_trace.reserve(std::size_t(spec.duration_s * gp.f_clock_hz) + 1024);

    std::int64_t clocks = 0;
    std::int64_t residual = 0;
    std::vector<std::int64_t> cycle_raws;
    std::vector<double> window_v;
    bool first_cycle = true;
    double peak_v = -1e300;

    auto feed = [&](int level, bool in_window) {
        conv.step(level);
        double v = conv.output_voltage();
        double i = conv.load_current();
        peak_v = std::max(peak_v, v);
        current_trace.push_back(i);
        if (in_window) window_v.push_back(v);
        if (clocks % spec.ts_decimation == 0) {
            ts.row_start();
            ts.field(conv.time() - conv.dt());
            ts.field(std::int64_t(level));
            ts.field(v);
            ts.field(i);
            for (const auto& m : conv.modules()) ts.field(m.cap_voltage);
            ts.row_end();
        }
        ++clocks;
    };

    while (true) {
        double t = double(clocks) * dt;
        if (t >= spec.duration_s) break;
        double f = spec.f_start_hz * std::pow(ratio, t / spec.duration_s);
        f = std::min(f, spec.f_end_hz);
        CycleTiming timing = derive_timing({f, gp.f_clock_hz}, gp.lut_length, gp.qformat, gp.tie);
        std::int64_t k = timing.clocks_per_cycle;
        std::int64_t a0 = initial_address(LutMethod::Improved, timing);
        CycleSamples cyc = synthesize_cycle(a0, timing, table, gp.address_mode);

        if (first_cycle && spec.start_at_crest) {
            // lead-in: start at the crest sample, plain NLM, no cycle correction
            std::size_t k0 = 0;
            for (std::size_t j = 1; j < cyc.sample_raws.size(); ++j)
                if (cyc.sample_raws[j] > cyc.sample_raws[k0]) k0 = j;
            for (std::size_t j = k0; j < cyc.sample_raws.size(); ++j)
                feed(nlm.level_for(cyc.sample_raws[j]), false);
            first_cycle = false;
            continue;
        }
        first_cycle = false;

        double t_start = double(clocks) * dt;
        window_v.clear();
        double spread_max = 0.0;
        std::int64_t cycle_sum = 0;
        for (std::int64_t j = 0; j < k; ++j) {
            int lv;
            if (j == k - 1) {
                std::int64_t want = -(residual + cycle_sum);
                std::int64_t got = std::clamp<std::int64_t>(want, -gp.n_levels, gp.n_levels);
                if (got != want) ++result.clamp_engagements;
                residual = want - got;
                lv = int(got);
            } else {
                lv = nlm.level_for(cyc.sample_raws[std::size_t(j)]);
            }
            cycle_sum += lv;
            feed(lv, true);
            spread_max = std::max(spread_max, window_spread_fraction(conv));
        }

        WaveformRecord rec;
        rec.sample_rate_hz = gp.f_clock_hz;
        rec.f_o_hz = timing.cycle_hz();
        rec.samples = window_v;
        DistortionReport rep = total_distortion(rec);

        double i_rms = 0.0;
        std::size_t n_tail = std::size_t(k);
        for (std::size_t j = current_trace.size() - n_tail; j < current_trace.size(); ++j)
            i_rms += current_trace[j] * current_trace[j];
        i_rms = std::sqrt(i_rms / double(n_tail));

        ChirpWindowRow row{t_start, timing.cycle_hz(), rep.total_distortion, spread_max,
                           i_rms * std::numbers::sqrt2};
        result.windows.push_back(row);
        win_csv.row_start();
        win_csv.field(row.t_start_s);
        win_csv.field(row.f_hz);
        win_csv.field(row.distortion);
        win_csv.field(row.spread_fraction);
        win_csv.field(row.current_amplitude);
        win_csv.row_end();
        ++result.cycles;
    }

    result.peak_voltage = peak_v;
    for (const auto& w : result.windows) {
        result.max_distortion = std::max(result.max_distortion, w.distortion);
        result.mean_distortion += w.distortion;
    }
    if (!result.windows.empty()) result.mean_distortion /= double(result.windows.size());
    result.max_spread_fraction = conv.max_spread_fraction();
    result.max_charge_error = conv.max_charge_error();
    result.min_parallel_loss =
        std::isfinite(conv.min_parallel_loss()) ? conv.min_parallel_loss() : 0.0;
    double scale = std::max(1e-12, conv.audit().source_in + conv.audit().stored_initial);
    result.audit_imbalance_rel = std::abs(conv.audit().imbalance(conv.stored_energy())) / scale;

    WaveformRecord itrace{gp.f_clock_hz, 0.0, std::move(current_trace)};
    auto spec_mat = spectrogram(itrace, spec.spectrogram_window, spec.spectrogram_hop);
    write_spectrogram_csv(spec_mat, out_dir / "chirp_spectrogram.csv", 6e6);
    write_spectrogram_pgm(spec_mat, out_dir / "chirp_spectrogram.pgm", 6e6);

    std::ofstream summary(out_dir / "chirp_summary.txt", std::ios::binary);
    summary << "exponential chirp " << format_number(spec.f_start_hz) << " Hz -> "
            << format_number(spec.f_end_hz) << " Hz in " << format_number(spec.duration_s)
            << " s, m=" << format_number(spec.modulation_factor) << "\n";
    summary << "cycles: " << result.cycles << "\n";
    summary << "peak_voltage_V: " << format_number(result.peak_voltage) << "\n";
    summary << "max_window_distortion: " << format_number(result.max_distortion) << "\n";
    summary << "mean_window_distortion: " << format_number(result.mean_distortion) << "\n";
    summary << "max_module_spread_fraction: " << format_number(result.max_spread_fraction)
            << "\n";
    summary << "max_paralleling_charge_error_rel: " << format_number(result.max_charge_error)
            << "\n";
    summary << "min_paralleling_loss_J: " << format_number(result.min_parallel_loss) << "\n";
    summary << "adaptive_clamp_engagements: " << result.clamp_engagements << "\n";
    summary << "energy_audit_imbalance_rel: " << format_number(result.audit_imbalance_rel)
            << "\n";
    summary << "switching_transitions: " << conv.switching_transitions() << "\n";
    summary << "balance_events: " << conv.balance_events() << "\n";
    return result;
}

}  // namespace wbsim
