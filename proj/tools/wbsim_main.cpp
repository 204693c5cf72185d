#include <cstdio>
#include <exception>
#include <filesystem>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "wbsim/io.hpp"
#include "wbsim/scenarios.hpp"

// wbsim: sweep | chirp | mix | message | simulate
//
// Precedence: built-in defaults < --config file < command-line flags.

namespace {

using namespace wbsim;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    double fclock = 0.0;  // 0 = leave default/config
    int levels = 0;
    std::string qformat;  // "total,frac"
};

GlobalParams resolve_globals(const CommonArgs& a, const Config& cfg) {
    GlobalParams gp = global_params_from(cfg);
    if (a.fclock > 0) gp.f_clock_hz = a.fclock;
    if (a.levels > 0) gp.n_levels = a.levels;
    if (!a.qformat.empty()) {
        int total = 0, frac = 0;
        if (std::sscanf(a.qformat.c_str(), "%d,%d", &total, &frac) != 2)
            throw ConfigError("--qformat expects 'total,frac', e.g. 18,14");
        gp.qformat = QFormat(total, frac);
    }
    return gp;
}

Config load_config(const CommonArgs& a) {
    Config cfg = a.config_path.empty() ? Config::parse_string("", "<defaults>")
                                       : Config::parse_file(a.config_path);
    validate_config(cfg);
    return cfg;
}

std::vector<double> parse_instants_us(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)) * 1e-6);
        pos = next + 1;
    }
    return out;
}

int cmd_sweep(const CommonArgs& a, bool full_grid, int cycles) {
    Config cfg = load_config(a);
    GlobalParams gp = resolve_globals(a, cfg);
    SweepSpec spec;
    spec.load = load_model_from(cfg);
    spec.converter = converter_config_from(cfg, ConverterConfig{});
    bool use_full = cfg.get_bool("sweep", "full_grid", full_grid);
    if (use_full) {
        spec.m_values = SweepSpec::full_grid_m_values();
        spec.f_values = SweepSpec::full_grid_f_values(gp.f_clock_hz);
    }
    if (cfg.has("sweep", "m_step")) {
        double step = cfg.get_double("sweep", "m_step", 0.05);
        spec.m_values.clear();
        for (double m = 0.0; m <= 1.0 + 1e-12; m += step) spec.m_values.push_back(m);
    }
    if (cfg.has("sweep", "f_count") || cfg.has("sweep", "f_min_hz") ||
        cfg.has("sweep", "f_max_hz")) {
        int count = int(cfg.get_int("sweep", "f_count", 200));
        double lo = cfg.get_double("sweep", "f_min_hz", 1e3);
        double hi = cfg.get_double("sweep", "f_max_hz", 5e6);
        spec.f_values.clear();
        for (int i = 0; i < count; ++i)
            spec.f_values.push_back(lo * std::pow(hi / lo, double(i) / double(count - 1)));
    }
    spec.record_cycles = int(cfg.get_int("sweep", "record_cycles", cycles));
    std::string classify_sig = cfg.get_string("sweep", "classify", "current");
    if (classify_sig == "current") spec.classify_current = true;
    else if (classify_sig == "levels") spec.classify_current = false;
    else throw ConfigError("sweep.classify must be 'current' or 'levels'");
    spec.with_converter = cfg.get_bool("sweep", "with_converter", false);
    spec.thresholds.theta_dc = cfg.get_double("sweep", "theta_dc", spec.thresholds.theta_dc);
    spec.thresholds.theta_lf = cfg.get_double("sweep", "theta_lf", spec.thresholds.theta_lf);

    SweepResult r = run_sweep(spec, gp, a.out_dir);
    for (const auto& m : r.methods)
        std::printf("%-20s ideal %lld / dc %lld / lf %lld of %lld cells\n", m.name.c_str(),
                    (long long)m.ideal, (long long)m.dc_bias, (long long)m.lf_osc,
                    (long long)m.cells);
    std::printf("sweep finished in %.1f s -> %s\n", r.wall_seconds, a.out_dir.c_str());
    return 0;
}

int cmd_chirp(const CommonArgs& a, double f_start, double f_end, double duration) {
    Config cfg = load_config(a);
    GlobalParams gp = resolve_globals(a, cfg);
    LoadModel load = load_model_from(cfg);
    ConverterConfig cc = converter_config_from(cfg, scenario_converter_defaults());
    ChirpSpec spec;
    if (f_start > 0) spec.f_start_hz = f_start;
    if (f_end > 0) spec.f_end_hz = f_end;
    if (duration > 0) spec.duration_s = duration;
    spec.f_start_hz = cfg.get_double("chirp", "f_start_hz", spec.f_start_hz);
    spec.f_end_hz = cfg.get_double("chirp", "f_end_hz", spec.f_end_hz);
    spec.duration_s = cfg.get_double("chirp", "duration_s", spec.duration_s);
    spec.modulation_factor =
        cfg.get_double("chirp", "modulation_factor", spec.modulation_factor);
    spec.start_at_crest = cfg.get_bool("chirp", "start_at_crest", spec.start_at_crest);
    spec.ts_decimation = int(cfg.get_int("chirp", "ts_decimation", spec.ts_decimation));
    spec.spectrogram_window =
        int(cfg.get_int("chirp", "spectrogram_window", spec.spectrogram_window));
    spec.spectrogram_hop = int(cfg.get_int("chirp", "spectrogram_hop", spec.spectrogram_hop));

    ChirpResult r = run_chirp(spec, cc, load, gp, a.out_dir);
    std::printf("chirp: %lld cycles, peak %.6g V, max distortion %.4g, max spread %.4g\n",
                (long long)r.cycles, r.peak_voltage, r.max_distortion,
                r.max_spread_fraction);
    return 0;
}

int cmd_mix(const CommonArgs& a, const std::string& plan_path) {
    Config cfg = load_config(a);
    GlobalParams gp = resolve_globals(a, cfg);
    LoadModel load = load_model_from(cfg);
    ConverterConfig cc = converter_config_from(cfg, scenario_converter_defaults());
    MixSpec spec;
    std::string plan_file = cfg.get_string("mix", "plan_file", plan_path);
    spec.plan = plan_file.empty() ? paper_mix_plan(gp.n_levels) : parse_plan_file(plan_file);
    spec.duration_s = cfg.get_double("mix", "duration_s", spec.duration_s);
    spec.ts_decimation = int(cfg.get_int("mix", "ts_decimation", spec.ts_decimation));
    spec.fft_window = int(cfg.get_int("mix", "fft_window", spec.fft_window));
    if (cfg.has("mix", "fft_instants_us"))
        spec.fft_instants_s = parse_instants_us(cfg.get_string("mix", "fft_instants_us", ""));
    spec.spectrogram_window =
        int(cfg.get_int("mix", "spectrogram_window", spec.spectrogram_window));
    spec.spectrogram_hop = int(cfg.get_int("mix", "spectrogram_hop", spec.spectrogram_hop));

    MixResult r = run_mix(spec, cc, load, gp, a.out_dir);
    std::printf("mix: lowest-channel current amplitude %.4g A, clamps %lld\n",
                r.fundamental_amplitude_a, (long long)r.clamp_engagements);
    return 0;
}

int cmd_message(const CommonArgs& a, const std::string& bitmap_path, double column_ms) {
    Config cfg = load_config(a);
    GlobalParams gp = resolve_globals(a, cfg);
    LoadModel load = load_model_from(cfg);
    ConverterConfig cc = converter_config_from(cfg, scenario_converter_defaults());
    MessageSpec spec;
    std::string bitmap_file = cfg.get_string("message", "bitmap_file", bitmap_path);
    if (bitmap_file.empty())
        throw ConfigError("message: provide --bitmap or message.bitmap_file");
    spec.bitmap = read_bitmap(bitmap_file);
    if (column_ms > 0) spec.column_duration_s = column_ms * 1e-3;
    spec.column_duration_s =
        cfg.get_double("message", "column_duration_s", spec.column_duration_s);
    spec.ts_decimation = int(cfg.get_int("message", "ts_decimation", spec.ts_decimation));
    spec.spectrogram_window =
        int(cfg.get_int("message", "spectrogram_window", spec.spectrogram_window));
    spec.spectrogram_hop =
        int(cfg.get_int("message", "spectrogram_hop", spec.spectrogram_hop));

    MessageResult r = run_message(spec, cc, load, gp, a.out_dir);
    std::printf("message: %lld/%lld pixels correct (%.4g%%)\n",
                (long long)(r.total_pixels - r.wrong_pixels), (long long)r.total_pixels,
                100.0 * r.pixel_accuracy);
    return 0;
}

int cmd_simulate(const CommonArgs& a, double f, double m, const std::string& method,
                 bool adaptive, int cycles) {
    Config cfg = load_config(a);
    GlobalParams gp = resolve_globals(a, cfg);
    LoadModel load = load_model_from(cfg);
    ConverterConfig cc = converter_config_from(cfg, scenario_converter_defaults());
    SimulateSpec spec;
    spec.f_hz = cfg.get_double("simulate", "f_hz", f);
    spec.modulation_factor = cfg.get_double("simulate", "m", m);
    std::string meth = cfg.get_string("simulate", "method", method);
    if (meth == "conventional") spec.method = LutMethod::Conventional;
    else if (meth == "inherited") spec.method = LutMethod::ErrorInherited;
    else if (meth == "improved") spec.method = LutMethod::Improved;
    else throw ConfigError("simulate.method must be conventional|inherited|improved");
    spec.adaptive = cfg.get_bool("simulate", "adaptive", adaptive);
    spec.cycles = int(cfg.get_int("simulate", "cycles", cycles));
    spec.with_converter = cfg.get_bool("simulate", "with_converter", true);
    spec.ts_decimation = int(cfg.get_int("simulate", "ts_decimation", spec.ts_decimation));

    SimulateResult r = run_simulate(spec, cc, load, gp, a.out_dir);
    std::printf("simulate: category %s, dc %.4g, lf %.4g, peak %.6g V\n",
                std::string(to_string(r.classification.category)).c_str(),
                r.classification.dc_metric, r.classification.lf_ratio, r.peak_voltage);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wide-bandwidth converter control simulator"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_path, "config file (sectioned key = value)");
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--fclock", common.fclock, "controller clock rate, Hz");
    app.add_option("--levels", common.levels, "maximum level magnitude");
    app.add_option("--qformat", common.qformat, "fixed-point format, e.g. 18,14");

    bool full_grid = false;
    int sweep_cycles = 64;
    auto* sweep = app.add_subcommand("sweep", "four-configuration classification maps");
    sweep->add_flag("--full-grid", full_grid, "paper-size grid (101 x 5000 cells)");
    sweep->add_option("--cycles", sweep_cycles, "record length, output cycles");

    double f_start = 0, f_end = 0, duration = 0;
    auto* chirp = app.add_subcommand("chirp", "exponential frequency sweep");
    chirp->add_option("--f-start", f_start, "start frequency, Hz");
    chirp->add_option("--f-end", f_end, "end frequency, Hz");
    chirp->add_option("--duration", duration, "sweep duration, s");

    std::string plan_path;
    auto* mix = app.add_subcommand("mix", "frequency-division channel mixing");
    mix->add_option("--plan", plan_path, "plan file: f_hz amplitude t_start_s t_end_s");

    std::string bitmap_path;
    double column_ms = 0;
    auto* message = app.add_subcommand("message", "bitmap as a spectrogram message");
    message->add_option("--bitmap", bitmap_path, "bitmap file, '0'/'1' rows");
    message->add_option("--column-ms", column_ms, "column duration, ms");

    double sim_f = 1e6, sim_m = 1.0;
    std::string sim_method = "improved";
    bool sim_adaptive = true;
    int sim_cycles = 256;
    auto* simulate = app.add_subcommand("simulate", "raw single-tone run");
    simulate->add_option("--freq", sim_f, "objective frequency, Hz");
    simulate->add_option("--m", sim_m, "modulation factor 0..1");
    simulate->add_option("--method", sim_method, "conventional|inherited|improved");
    simulate->add_flag("--adaptive,!--no-adaptive", sim_adaptive, "adaptive NLM");
    simulate->add_option("--cycles", sim_cycles, "output cycles to run");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(common.out_dir);
        if (sweep->parsed()) return cmd_sweep(common, full_grid, sweep_cycles);
        if (chirp->parsed()) return cmd_chirp(common, f_start, f_end, duration);
        if (mix->parsed()) return cmd_mix(common, plan_path);
        if (message->parsed()) return cmd_message(common, bitmap_path, column_ms);
        if (simulate->parsed())
            return cmd_simulate(common, sim_f, sim_m, sim_method, sim_adaptive, sim_cycles);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
