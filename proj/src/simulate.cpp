#include <algorithm>
#include <cmath>
#include <fstream>

#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// Raw single-tone run: synthesize, modulate, optionally drive the converter,
// classify what came out.

namespace wbsim {

SimulateResult run_simulate(const SimulateSpec& spec, const ConverterConfig& cc,
                            const LoadModel& load, const GlobalParams& gp,
                            const std::filesystem::path& out_dir) {
    if (spec.cycles < 4) throw std::invalid_argument("run_simulate: need >= 4 cycles");
    std::filesystem::create_directories(out_dir);
    LutTable table = build_sine_table(gp.lut_length, gp.qformat, gp.tie);
    CycleTiming timing =
        derive_timing({spec.f_hz, gp.f_clock_hz}, gp.lut_length, gp.qformat, gp.tie);
    std::int64_t k = timing.clocks_per_cycle;
    double dt = 1.0 / gp.f_clock_hz;

    double tau = load.inductance / load.resistance;
    std::int64_t warm =
        std::max<std::int64_t>(1, std::int64_t(std::ceil(8.0 * tau / dt / double(k))));

    ReferenceSynth synth(table, timing, spec.method, gp.address_mode);
    std::vector<std::int64_t> raws;
    raws.reserve(std::size_t((warm + spec.cycles) * k));
    for (std::int64_t c = 0; c < warm + spec.cycles; ++c) synth.next_cycle(raws);

    NlmModulator nlm({spec.modulation_factor, gp.n_levels}, gp.qformat, gp.tie);
    CascadedConverter conv(cc, load, gp.f_clock_hz);
    RlLoad rl(load);

    CsvWriter ts(out_dir / "simulate_timeseries.csv");
    {
        std::vector<std::string> cols = {"time_s", "level", "v_out_V", "i_load_A"};
        if (spec.with_converter)
            for (int i = 1; i <= cc.n_modules; ++i)
                cols.push_back("module_" + std::to_string(i) + "_V");
        ts.header(cols);
    }

    SimulateResult result;
    std::vector<double> record;
    record.reserve(std::size_t(spec.cycles * k));
    std::int64_t residual = 0;
    std::size_t idx = 0;
    for (std::int64_t c = 0; c < warm + spec.cycles; ++c) {
        std::int64_t cycle_sum = 0;
        for (std::int64_t j = 0; j < k; ++j, ++idx) {
            int lv;
            if (spec.adaptive && j == k - 1) {
                std::int64_t want = -(residual + cycle_sum);
                std::int64_t got = std::clamp<std::int64_t>(want, -gp.n_levels, gp.n_levels);
                residual = want - got;
                lv = int(got);
            } else {
                lv = nlm.level_for(raws[idx]);
            }
            cycle_sum += lv;
            double v, i;
            if (spec.with_converter) {
                conv.step(lv);
                v = conv.output_voltage();
                i = conv.load_current();
            } else {
                v = double(lv) * cc.nominal_voltage;
                i = rl.step(v, dt);
            }
            result.peak_voltage = std::max(result.peak_voltage, v);
            if (c >= warm) record.push_back(i);
            if (idx % std::size_t(spec.ts_decimation) == 0) {
                ts.row_start();
                ts.field(double(idx) * dt);
                ts.field(std::int64_t(lv));
                ts.field(v);
                ts.field(i);
                if (spec.with_converter)
                    for (const auto& m : conv.modules()) ts.field(m.cap_voltage);
                ts.row_end();
            }
        }
    }

    std::size_t decim = std::max<std::size_t>(1, record.size() / 8192);
    WaveformRecord rec;
    rec.sample_rate_hz = gp.f_clock_hz / double(decim);
    rec.f_o_hz = timing.cycle_hz();
    rec.samples = decimate_block_mean(record, decim);
    result.classification = classify(rec);

    std::ofstream summary(out_dir / "simulate_summary.txt", std::ios::binary);
    summary << "single tone f=" << format_number(spec.f_hz)
            << " Hz (effective " << format_number(timing.cycle_hz()) << " Hz), m="
            << format_number(spec.modulation_factor) << ", method "
            << (spec.method == LutMethod::Conventional
                    ? "conventional"
                    : spec.method == LutMethod::ErrorInherited ? "inherited" : "improved")
            << (spec.adaptive ? " + adaptive NLM" : " + plain NLM") << "\n";
    summary << "clocks_per_cycle: " << k << "\n";
    summary << "delta_a: " << format_number(timing.delta_a()) << "\n";
    auto lf = predict_lf_oscillation(timing);
    if (lf.oscillates)
        summary << "predicted_lf: eq_value " << format_number(lf.eq_value) << ", "
                << format_number(lf.frequency_hz) << " Hz\n";
    else
        summary << "predicted_lf: none (exact division)\n";
    summary << "category: " << to_string(result.classification.category) << "\n";
    summary << "dc_metric: " << format_number(result.classification.dc_metric) << "\n";
    summary << "lf_ratio: " << format_number(result.classification.lf_ratio) << "\n";
    if (result.classification.lf_peak_hz)
        summary << "lf_peak_Hz: " << format_number(*result.classification.lf_peak_hz) << "\n";
    summary << "peak_voltage_V: " << format_number(result.peak_voltage) << "\n";
    return result;
}

}  // namespace wbsim
