#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// Four-configuration classification sweep over (frequency, modulation factor).
// Per cell the level stream is pushed through the load model and the current
// is classified: DC bias and LF oscillation are over-current phenomena, so
// the load response is what separates the three populations.

namespace wbsim {

namespace {

struct StreamClassifier {
    // accumulates a decimated record plus full-resolution mean/rms
    std::size_t decim = 1;
    std::vector<double> decimated;
    double block_acc = 0.0;
    std::size_t block_fill = 0;

    void reserve(std::size_t n) { decimated.reserve(n / decim + 2); }
    void push(double v) {
        block_acc += v;
        if (++block_fill == decim) {
            decimated.push_back(block_acc / double(decim));
            block_acc = 0.0;
            block_fill = 0;
        }
    }
};

struct CellOutcome {
    ClassificationResult cls;
    std::int64_t nonzero_cycle_sums = 0;
    std::int64_t cycles = 0;
    std::int64_t clamps = 0;
};

// One grid cell: modulate the pre-synthesized reference, filter, classify.
CellOutcome run_cell(std::span<const std::int64_t> raws, const CycleTiming& timing,
                     bool adaptive, double m, const SweepSpec& spec, const GlobalParams& gp,
                     std::int64_t warm_cycles) {
    CellOutcome out;
    std::int64_t k = timing.clocks_per_cycle;
    std::int64_t total_cycles = std::int64_t(raws.size()) / k;
    out.cycles = total_cycles;

    NlmModulator nlm({m, gp.n_levels}, gp.qformat, gp.tie);
    RlLoad rl(spec.load);
    double dt = 1.0 / gp.f_clock_hz;

    std::size_t record_samples = std::size_t((total_cycles - warm_cycles) * k);
    StreamClassifier sc;
    sc.decim = std::max<std::size_t>(1, record_samples / 8192);
    sc.reserve(record_samples);

    std::int64_t residual = 0;
    std::size_t idx = 0;
    for (std::int64_t c = 0; c < total_cycles; ++c) {
        std::int64_t cycle_sum = 0;
        for (std::int64_t j = 0; j < k; ++j, ++idx) {
            int lv;
            if (adaptive && j == k - 1) {
                std::int64_t want = -(residual + cycle_sum);
                std::int64_t got =
                    std::clamp<std::int64_t>(want, -gp.n_levels, gp.n_levels);
                if (got != want) ++out.clamps;
                residual = want - got;
                lv = int(got);
            } else {
                lv = nlm.level_for(raws[idx]);
            }
            cycle_sum += lv;
            double sig = double(lv);
            if (spec.classify_current) sig = rl.step(sig, dt);
            if (c >= warm_cycles) sc.push(sig);
        }
        if (adaptive && cycle_sum != 0) ++out.nonzero_cycle_sums;
    }

    WaveformRecord rec;
    rec.sample_rate_hz = gp.f_clock_hz / double(sc.decim);
    rec.f_o_hz = timing.cycle_hz();
    rec.samples = std::move(sc.decimated);
    out.cls = classify(rec, spec.thresholds);
    return out;
}

// Same cell but through the full converter model.
CellOutcome run_cell_converter(std::span<const std::int64_t> raws, const CycleTiming& timing,
                               bool adaptive, double m, const SweepSpec& spec,
                               const GlobalParams& gp, std::int64_t warm_cycles) {
    CellOutcome out;
    std::int64_t k = timing.clocks_per_cycle;
    std::int64_t total_cycles = std::int64_t(raws.size()) / k;
    out.cycles = total_cycles;

    NlmModulator nlm({m, gp.n_levels}, gp.qformat, gp.tie);
    CascadedConverter conv(spec.converter, spec.load, gp.f_clock_hz);

    std::size_t record_samples = std::size_t((total_cycles - warm_cycles) * k);
    StreamClassifier sc;
    sc.decim = std::max<std::size_t>(1, record_samples / 8192);
    sc.reserve(record_samples);

    std::int64_t residual = 0;
    std::size_t idx = 0;
    for (std::int64_t c = 0; c < total_cycles; ++c) {
        std::int64_t cycle_sum = 0;
        for (std::int64_t j = 0; j < k; ++j, ++idx) {
            int lv;
            if (adaptive && j == k - 1) {
                std::int64_t want = -(residual + cycle_sum);
                std::int64_t got =
                    std::clamp<std::int64_t>(want, -gp.n_levels, gp.n_levels);
                if (got != want) ++out.clamps;
                residual = want - got;
                lv = int(got);
            } else {
                lv = nlm.level_for(raws[idx]);
            }
            cycle_sum += lv;
            conv.step(lv);
            if (c >= warm_cycles) sc.push(conv.load_current());
        }
        if (adaptive && cycle_sum != 0) ++out.nonzero_cycle_sums;
    }

    WaveformRecord rec;
    rec.sample_rate_hz = gp.f_clock_hz / double(sc.decim);
    rec.f_o_hz = timing.cycle_hz();
    rec.samples = std::move(sc.decimated);
    out.cls = classify(rec, spec.thresholds);
    return out;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const GlobalParams& gp,
                      const std::filesystem::path& out_dir) {
    if (spec.m_values.empty() || spec.f_values.empty())
        throw std::invalid_argument("run_sweep: empty grid");
    for (double f : spec.f_values)
        if (f <= 0 || f > gp.f_clock_hz / 2.0)
            throw std::invalid_argument("run_sweep: frequency outside (0, f_clock/2]");

    auto t_begin = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    LutTable table = build_sine_table(gp.lut_length, gp.qformat, gp.tie);

    double tau = spec.load.inductance / spec.load.resistance;
    double dt = 1.0 / gp.f_clock_hz;

    SweepResult result;
    for (const auto& method : spec.methods) {
        SweepMethodSummary sum;
        sum.name = method.name;
        CsvWriter csv(out_dir / ("sweep_" + method.name + ".csv"));
        csv.header({"f_Hz", "m", "category", "dc_metric", "lf_ratio", "lf_peak_Hz"});

        std::vector<std::int64_t> raws;
        for (double f : spec.f_values) {
            CycleTiming timing = derive_timing({f, gp.f_clock_hz}, gp.lut_length, gp.qformat,
                                               gp.tie);
            std::int64_t k = timing.clocks_per_cycle;

            std::int64_t warm = 1;
            if (spec.classify_current)
                warm = std::max<std::int64_t>(
                    1, std::int64_t(std::ceil(8.0 * tau / dt / double(k))));

            std::int64_t cycles = spec.record_cycles;
            if (method.lut == LutMethod::ErrorInherited && timing.drift_raw() != 0) {
                // stretch the record to cover several periods of the predicted
                // subharmonic, within a sample budget
                double periods = double(gp.lut_length) / std::abs(timing.drift_per_cycle());
                std::int64_t want = std::int64_t(std::ceil(12.0 * periods));
                want = std::clamp<std::int64_t>(want, spec.record_cycles, 2048);
                std::int64_t budget =
                    std::max<std::int64_t>(spec.record_cycles, (std::int64_t(1) << 23) / k);
                cycles = std::min(want, budget);
            }

            raws.clear();
            raws.reserve(std::size_t((warm + cycles) * k));
            ReferenceSynth synth(table, timing, method.lut, gp.address_mode);
            for (std::int64_t c = 0; c < warm + cycles; ++c) synth.next_cycle(raws);

            for (double m : spec.m_values) {
                CellOutcome cell =
                    spec.with_converter
                        ? run_cell_converter(raws, timing, method.adaptive, m, spec, gp, warm)
                        : run_cell(raws, timing, method.adaptive, m, spec, gp, warm);
                sum.cells += 1;
                switch (cell.cls.category) {
                    case OutputCategory::Ideal: sum.ideal += 1; break;
                    case OutputCategory::DCBias: sum.dc_bias += 1; break;
                    case OutputCategory::LFOscillation: sum.lf_osc += 1; break;
                }
                if (method.adaptive) {
                    sum.cycles_checked += cell.cycles;
                    sum.nonzero_cycle_sums += cell.nonzero_cycle_sums;
                    sum.clamp_engagements += cell.clamps;
                }
                csv.row_start();
                csv.field(f);
                csv.field(m);
                csv.field(std::string(to_string(cell.cls.category)));
                csv.field(cell.cls.dc_metric);
                csv.field(cell.cls.lf_ratio);
                if (cell.cls.lf_peak_hz) csv.field(*cell.cls.lf_peak_hz);
                else csv.field(std::string(""));
                csv.row_end();
            }
        }
        result.methods.push_back(sum);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

    std::ofstream summary(out_dir / "sweep_summary.txt", std::ios::binary);
    summary << "classification sweep\n";
    summary << "grid: " << spec.m_values.size() << " m-values x " << spec.f_values.size()
            << " frequencies, record >= " << spec.record_cycles << " cycles/cell\n";
    summary << "classified signal: "
            << (spec.with_converter ? "converter load current"
                                    : (spec.classify_current ? "load-model current"
                                                             : "level stream"))
            << "\n";
    summary << "thresholds: theta_dc=" << format_number(spec.thresholds.theta_dc)
            << " theta_lf=" << format_number(spec.thresholds.theta_lf) << "\n\n";
    for (const auto& m : result.methods) {
        summary << m.name << ": cells=" << m.cells << " ideal=" << m.ideal
                << " dc_bias=" << m.dc_bias << " lf_oscillation=" << m.lf_osc << "\n";
        if (m.cycles_checked > 0)
            summary << "  adaptive audit: cycles=" << m.cycles_checked
                    << " nonzero_sums=" << m.nonzero_cycle_sums
                    << " clamp_engagements=" << m.clamp_engagements << "\n";
    }
    return result;
}

}  // namespace wbsim
