#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Behavioral model of the seven-module cascaded double-H-bridge arm: level
// commands map to per-module connection states, paralleling equalizes
// capacitor voltages (charge conserving, loss booked), a single DC source
// feeds one module, and an RL load closes the loop.
//
// Switching transients are out of scope; paralleling is instantaneous and
// switching loss is counted as connection transitions, not joules.

namespace wbsim {

enum class Connection {
    BypassPos,
    BypassNeg,
    SeriesPos,
    SeriesNeg,
    ParallelPos,
    ParallelNeg,
};

inline bool is_series(Connection c) {
    return c == Connection::SeriesPos || c == Connection::SeriesNeg;
}
inline bool is_parallel(Connection c) {
    return c == Connection::ParallelPos || c == Connection::ParallelNeg;
}

struct ModuleState {
    double cap_voltage = 0.0;   // volts, >= 0
    double capacitance = 0.0;   // farads
    Connection connection = Connection::BypassPos;
};

struct ConverterConfig {
    int n_modules = 7;
    double nominal_voltage = 20.0;       // volts per module
    int source_module_index = 4;         // 1-based, per the prototype wiring
    double source_current_limit = 200.0; // amperes
    double module_capacitance = 100e-6;  // farads
    // Clocks between forced paralleling events of all non-series modules.
    // 0 disables the schedule (force_balance() still works).
    std::int64_t balance_interval_clocks = 100;
};

struct LoadModel {
    double resistance = 2.8;    // ohms
    double inductance = 1.5e-6; // henries
};

// Semi-implicit RL integrator: unconditionally stable, exact energy identity
// used by the converter's audit.
class RlLoad {
  public:
    RlLoad(const LoadModel& m) : model_(m) {}

    // Advances one step under terminal voltage v; returns the new current.
    double step(double v, double dt);
    double current() const { return current_; }
    const LoadModel& model() const { return model_; }
    void reset(double i0 = 0.0) { current_ = i0; }

  private:
    LoadModel model_;
    double current_ = 0.0;
};

// Per-module connection assignment for a level command. Exactly |level|
// modules starting at the rotation offset go to Series+/-; the rest are
// bypassed, or paralleled on balance clocks. Polarity follows the level sign.
void assign_connections(int level, int n_modules, int rotation_offset,
                        bool balance_clock, std::span<Connection> out);

// Charge-conserving equalization of a paralleled group. Returns the
// dissipated energy (nonnegative). No-op for groups smaller than two.
double apply_parallel_balancing(std::span<ModuleState> group);

struct EnergyAudit {
    double source_in = 0.0;
    double load_dissipation = 0.0;
    double parallel_loss = 0.0;
    double source_interface_loss = 0.0;
    // Signed artifacts of the discrete integration (inductor semi-implicit
    // dissipation minus capacitor explicit-update creation).
    double integrator_residual = 0.0;
    double stored_initial = 0.0;

    // source_in + stored_initial - all sinks - stored_now; ~0 for a correct run.
    double imbalance(double stored_now) const {
        return source_in + stored_initial - load_dissipation - parallel_loss -
               source_interface_loss - integrator_residual - stored_now;
    }
};

class CascadedConverter {
  public:
    CascadedConverter(const ConverterConfig& cfg, const LoadModel& load, double f_clock_hz);

    // Advances one controller clock with the given level command.
    // output_voltage()/load_current() afterwards refer to this clock:
    // the voltage uses the capacitor state at the start of the clock, the
    // current is the value flowing during it.
    void step(int level);

    void force_balance();

    double output_voltage() const { return v_out_; }
    double load_current() const { return load_.current(); }
    double time() const { return double(clock_index_) * dt_; }
    double dt() const { return dt_; }
    std::span<const ModuleState> modules() const { return modules_; }
    const ConverterConfig& config() const { return cfg_; }

    double stored_energy() const;
    const EnergyAudit& audit() const { return audit_; }

    // max over run of max_i |V_i - mean| / mean
    double max_spread_fraction() const { return max_spread_fraction_; }
    // worst relative charge error across paralleling events
    double max_charge_error() const { return max_charge_error_; }
    double min_parallel_loss() const { return min_parallel_loss_; }
    std::int64_t switching_transitions() const { return switching_transitions_; }
    std::int64_t balance_events() const { return balance_events_; }

  private:
    void source_inject();
    void track_spread();

    ConverterConfig cfg_;
    RlLoad load_;
    double dt_;
    std::vector<ModuleState> modules_;
    std::vector<Connection> scratch_;
    double v_out_ = 0.0;
    std::int64_t clock_index_ = 0;
    int rotation_offset_ = 0;
    EnergyAudit audit_;
    double max_spread_fraction_ = 0.0;
    double max_charge_error_ = 0.0;
    double min_parallel_loss_ = 0.0;
    std::int64_t switching_transitions_ = 0;
    std::int64_t balance_events_ = 0;
};

}  // namespace wbsim
