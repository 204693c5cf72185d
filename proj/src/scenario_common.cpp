#include <cmath>
#include <fstream>
#include <sstream>

#include "wbsim/scenarios.hpp"

namespace wbsim {

std::vector<MethodSpec> all_method_specs() {
    return {
        {LutMethod::Conventional, false, "conventional_nlm"},
        {LutMethod::ErrorInherited, false, "inherited_nlm"},
        {LutMethod::Improved, false, "improved_nlm"},
        {LutMethod::Improved, true, "improved_adaptive"},
    };
}

std::vector<double> SweepSpec::default_m_values() {
    std::vector<double> v;
    for (int i = 0; i <= 20; ++i) v.push_back(double(i) * 0.05);
    return v;
}

std::vector<double> SweepSpec::default_f_values() {
    std::vector<double> v;
    const int n = 200;
    const double f_lo = 1e3, f_hi = 5e6;
    for (int i = 0; i < n; ++i)
        v.push_back(f_lo * std::pow(f_hi / f_lo, double(i) / double(n - 1)));
    return v;
}

std::vector<double> SweepSpec::full_grid_m_values() {
    std::vector<double> v;
    for (int i = 0; i <= 100; ++i) v.push_back(double(i) * 0.01);
    return v;
}

std::vector<double> SweepSpec::full_grid_f_values(double f_clock_hz) {
    std::vector<double> v;
    for (double f = 1e3; f <= 5e6 && f <= f_clock_hz / 2.0; f += 1e3) v.push_back(f);
    return v;
}

ConverterConfig scenario_converter_defaults() {
    ConverterConfig cc;
    cc.module_capacitance = 10e-3;
    cc.source_current_limit = 250.0;
    cc.balance_interval_clocks = 100;
    return cc;
}

ChannelPlan paper_mix_plan(int n_levels) {
    // Table amplitudes {2,4,3,4,4,6} plus an always-on fundamental at
    // amplitude 1, all scaled 7/8 so the busiest intervals sum to exactly
    // n_levels for the 7-level arm.
    double s = double(n_levels) / 8.0;
    ChannelPlan p;
    p.channels = {
        {10e3, 1.0 * s, 0.0, 1000e-6},
        {100e3, 2.0 * s, 0.0, 200e-6},
        {200e3, 4.0 * s, 100e-6, 500e-6},
        {400e3, 3.0 * s, 400e-6, 800e-6},
        {1e6, 4.0 * s, 600e-6, 700e-6},
        {3e6, 4.0 * s, 700e-6, 800e-6},
        {5e6, 6.0 * s, 800e-6, 1000e-6},
    };
    return p;
}

ChannelPlan parse_plan_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open plan file " + p.string());
    ChannelPlan plan;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        Channel c;
        if (!(ss >> c.frequency_hz)) continue;  // blank line
        if (!(ss >> c.amplitude_levels >> c.t_start_s >> c.t_end_s))
            throw std::runtime_error(p.string() + ":" + std::to_string(lineno) +
                                     ": expected 'f_hz amplitude t_start_s t_end_s'");
        plan.channels.push_back(c);
    }
    if (plan.channels.empty()) throw std::runtime_error(p.string() + ": empty plan");
    return plan;
}

// ----------------------------------------------------------------- config --

namespace {

TieRule tie_from_string(const std::string& s) {
    if (s == "away") return TieRule::AwayFromZero;
    if (s == "even") return TieRule::ToEven;
    if (s == "halfup") return TieRule::HalfUp;
    throw ConfigError("unknown tie rule '" + s + "' (away|even|halfup)");
}

AddressMode address_mode_from_string(const std::string& s) {
    if (s == "round") return AddressMode::RoundNearest;
    if (s == "truncate") return AddressMode::Truncate;
    throw ConfigError("unknown address mode '" + s + "' (round|truncate)");
}

}  // namespace

GlobalParams global_params_from(const Config& c) {
    GlobalParams gp;
    gp.f_clock_hz = c.get_double("global", "f_clock_hz", gp.f_clock_hz);
    gp.n_levels = int(c.get_int("global", "n_levels", gp.n_levels));
    int total = int(c.get_int("global", "q_total_bits", gp.qformat.total_bits));
    int frac = int(c.get_int("global", "q_frac_bits", gp.qformat.frac_bits));
    gp.qformat = QFormat(total, frac);
    gp.lut_length = int(c.get_int("global", "lut_length", gp.lut_length));
    gp.tie = tie_from_string(c.get_string("global", "tie_rule", "away"));
    gp.address_mode = address_mode_from_string(c.get_string("global", "address_mode", "round"));
    if (gp.f_clock_hz <= 0) throw ConfigError("global.f_clock_hz must be positive");
    if (gp.n_levels < 1) throw ConfigError("global.n_levels must be >= 1");
    return gp;
}

LoadModel load_model_from(const Config& c) {
    LoadModel m;
    m.resistance = c.get_double("load", "resistance_ohm", m.resistance);
    m.inductance = c.get_double("load", "inductance_h", m.inductance);
    if (m.resistance <= 0 || m.inductance < 0) throw ConfigError("bad [load] values");
    return m;
}

ConverterConfig converter_config_from(const Config& c, const ConverterConfig& defaults) {
    ConverterConfig cc = defaults;
    cc.n_modules = int(c.get_int("converter", "n_modules", cc.n_modules));
    cc.nominal_voltage = c.get_double("converter", "nominal_voltage_v", cc.nominal_voltage);
    cc.source_module_index =
        int(c.get_int("converter", "source_module_index", cc.source_module_index));
    cc.source_current_limit =
        c.get_double("converter", "source_current_limit_a", cc.source_current_limit);
    cc.module_capacitance =
        c.get_double("converter", "module_capacitance_f", cc.module_capacitance);
    cc.balance_interval_clocks =
        c.get_int("converter", "balance_interval_clocks", cc.balance_interval_clocks);
    return cc;
}

void validate_config(const Config& c) {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"global",
         {"f_clock_hz", "n_levels", "q_total_bits", "q_frac_bits", "lut_length", "tie_rule",
          "address_mode"}},
        {"load", {"resistance_ohm", "inductance_h"}},
        {"converter",
         {"n_modules", "nominal_voltage_v", "source_module_index", "source_current_limit_a",
          "module_capacitance_f", "balance_interval_clocks"}},
        {"sweep",
         {"m_step", "f_count", "f_min_hz", "f_max_hz", "record_cycles", "classify",
          "with_converter", "full_grid", "theta_dc", "theta_lf"}},
        {"chirp",
         {"f_start_hz", "f_end_hz", "duration_s", "modulation_factor", "start_at_crest",
          "ts_decimation", "spectrogram_window", "spectrogram_hop"}},
        {"mix",
         {"duration_s", "plan_file", "ts_decimation", "fft_window", "fft_instants_us",
          "spectrogram_window", "spectrogram_hop"}},
        {"message",
         {"bitmap_file", "column_duration_s", "ts_decimation", "spectrogram_window",
          "spectrogram_hop"}},
        {"simulate",
         {"f_hz", "m", "method", "adaptive", "cycles", "with_converter", "ts_decimation"}},
    };
    c.reject_unknown(schema);
}

}  // namespace wbsim
