#include "wbsim/converter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wbsim {

double RlLoad::step(double v, double dt) {
    if (model_.inductance <= 0.0) {
        current_ = v / model_.resistance;
        return current_;
    }
    current_ = (current_ + dt * v / model_.inductance) /
               (1.0 + dt * model_.resistance / model_.inductance);
    return current_;
}

void assign_connections(int level, int n_modules, int rotation_offset,
                        bool balance_clock, std::span<Connection> out) {
    if (std::abs(level) > n_modules)
        throw std::out_of_range("assign_connections: |level| exceeds module count");
    bool positive = level >= 0;
    Connection series = positive ? Connection::SeriesPos : Connection::SeriesNeg;
    Connection idle = balance_clock ? (positive ? Connection::ParallelPos : Connection::ParallelNeg)
                                    : (positive ? Connection::BypassPos : Connection::BypassNeg);
    int engaged = std::abs(level);
    for (int i = 0; i < n_modules; ++i) out[std::size_t(i)] = idle;
    for (int i = 0; i < engaged; ++i) {
        int slot = (rotation_offset + i) % n_modules;
        out[std::size_t(slot)] = series;
    }
}

double apply_parallel_balancing(std::span<ModuleState> group) {
    if (group.size() < 2) return 0.0;
    double charge = 0.0, cap_total = 0.0;
    for (const auto& m : group) {
        charge += m.capacitance * m.cap_voltage;
        cap_total += m.capacitance;
    }
    double v_common = charge / cap_total;
    // E_before - E_after in the sum-of-squares form, nonnegative by construction
    double loss = 0.0;
    for (auto& m : group) {
        double dv = m.cap_voltage - v_common;
        loss += 0.5 * m.capacitance * dv * dv;
        m.cap_voltage = v_common;
    }
    return loss;
}

CascadedConverter::CascadedConverter(const ConverterConfig& cfg, const LoadModel& load,
                                     double f_clock_hz)
    : cfg_(cfg), load_(load), dt_(1.0 / f_clock_hz) {
    if (cfg.n_modules < 1) throw std::invalid_argument("converter: n_modules must be >= 1");
    if (cfg.source_module_index < 1 || cfg.source_module_index > cfg.n_modules)
        throw std::invalid_argument("converter: source module index out of range");
    if (load.resistance <= 0.0 || load.inductance < 0.0)
        throw std::invalid_argument("converter: bad load model");
    modules_.resize(std::size_t(cfg.n_modules));
    scratch_.resize(std::size_t(cfg.n_modules));
    for (auto& m : modules_) {
        m.cap_voltage = cfg.nominal_voltage;
        m.capacitance = cfg.module_capacitance;
    }
    audit_.stored_initial = stored_energy();
    min_parallel_loss_ = std::numeric_limits<double>::infinity();
}

double CascadedConverter::stored_energy() const {
    double e = 0.5 * load_.model().inductance * load_.current() * load_.current();
    for (const auto& m : modules_) e += 0.5 * m.capacitance * m.cap_voltage * m.cap_voltage;
    return e;
}

void CascadedConverter::force_balance() {
    // Gather all non-series modules into one paralleled group.
    static thread_local std::vector<std::size_t> members;
    members.clear();
    for (std::size_t i = 0; i < modules_.size(); ++i)
        if (!is_series(modules_[i].connection)) members.push_back(i);
    if (members.size() >= 2) {
        double charge_before = 0.0, cap_total = 0.0;
        for (auto i : members) {
            charge_before += modules_[i].capacitance * modules_[i].cap_voltage;
            cap_total += modules_[i].capacitance;
        }
        double v_common = charge_before / cap_total;
        double loss = 0.0;
        for (auto i : members) {
            double dv = modules_[i].cap_voltage - v_common;
            loss += 0.5 * modules_[i].capacitance * dv * dv;
            modules_[i].cap_voltage = v_common;
        }
        audit_.parallel_loss += loss;
        min_parallel_loss_ = std::min(min_parallel_loss_, loss);
        double charge_after = cap_total * v_common;
        double denom = std::max(std::abs(charge_before), 1e-300);
        max_charge_error_ =
            std::max(max_charge_error_, std::abs(charge_after - charge_before) / denom);
    }
    ++balance_events_;
    rotation_offset_ = (rotation_offset_ + 1) % cfg_.n_modules;
}

void CascadedConverter::source_inject() {
    auto& m = modules_[std::size_t(cfg_.source_module_index - 1)];
    double want = (cfg_.nominal_voltage - m.cap_voltage) * m.capacitance / dt_;
    double i_src = std::clamp(want, -cfg_.source_current_limit, cfg_.source_current_limit);
    if (i_src == 0.0) return;
    double v_before = m.cap_voltage;
    m.cap_voltage += i_src * dt_ / m.capacitance;
    double v_mid = 0.5 * (v_before + m.cap_voltage);
    audit_.source_in += cfg_.nominal_voltage * i_src * dt_;
    audit_.source_interface_loss += (cfg_.nominal_voltage - v_mid) * i_src * dt_;
}

void CascadedConverter::track_spread() {
    double sum = 0.0;
    for (const auto& m : modules_) sum += m.cap_voltage;
    double mean = sum / double(cfg_.n_modules);
    if (mean <= 0.0) return;
    double worst = 0.0;
    for (const auto& m : modules_) worst = std::max(worst, std::abs(m.cap_voltage - mean));
    max_spread_fraction_ = std::max(max_spread_fraction_, worst / mean);
}

void CascadedConverter::step(int level) {
    bool balance_due = cfg_.balance_interval_clocks > 0 &&
                       clock_index_ % cfg_.balance_interval_clocks == 0;
    assign_connections(level, cfg_.n_modules, rotation_offset_, balance_due,
                       std::span<Connection>(scratch_));
    for (std::size_t i = 0; i < modules_.size(); ++i) {
        if (modules_[i].connection != scratch_[i]) ++switching_transitions_;
        modules_[i].connection = scratch_[i];
    }
    if (balance_due) force_balance();
    source_inject();

    v_out_ = 0.0;
    for (const auto& m : modules_) {
        if (m.connection == Connection::SeriesPos) v_out_ += m.cap_voltage;
        else if (m.connection == Connection::SeriesNeg) v_out_ -= m.cap_voltage;
    }

    double i_prev = load_.current();
    double i_now = load_.step(v_out_, dt_);
    audit_.load_dissipation += load_.model().resistance * i_now * i_now * dt_;
    double di = i_now - i_prev;
    audit_.integrator_residual += 0.5 * load_.model().inductance * di * di;

    // Series capacitors exchange charge with the load; the explicit update
    // creates a small (i*dt)^2/2C energy artifact booked with the residual.
    for (auto& m : modules_) {
        if (!is_series(m.connection)) continue;
        double dv = i_now * dt_ / m.capacitance;
        m.cap_voltage += m.connection == Connection::SeriesPos ? -dv : dv;
        if (m.cap_voltage < 0.0) m.cap_voltage = 0.0;  // safety floor, see tests
        audit_.integrator_residual -= (i_now * dt_) * (i_now * dt_) / (2.0 * m.capacitance);
    }

    track_spread();
    ++clock_index_;
}

}  // namespace wbsim
