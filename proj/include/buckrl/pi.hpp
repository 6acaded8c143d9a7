#pragma once

#include "buckrl/converter.hpp"
#include "buckrl/env.hpp"
#include "buckrl/trace.hpp"

#include <optional>
#include <vector>

namespace buckrl {

/// Cascaded PI gains: voltage loop (kvp, kvi) feeds the current loop (kcp, kci).
struct PiGains {
    double kvp = 0.33;
    double kvi = 40.0;
    double kcp = 0.09;
    double kci = 35.0;
};

struct PiState {
    double integ_v = 0.0;  // V*s
    double integ_c = 0.0;  // A*s
};

struct PiLimits {
    double d_min = 0.01;
    double d_max = 0.99;
};

struct PiOutput {
    double duty = 0.0;
    double i_ref = 0.0;
    PiState state;
    bool saturated = false;
};

/// One update of the double loop with clamping anti-windup: when the duty
/// saturates and the current error pushes further into the limit, both
/// integrators keep their previous values.
PiOutput pi_controller_step(const PiState& state, double v_o, double i_l, double v_ref, const PiGains& gains,
                            double dt, const PiLimits& limits = {});

/// Integrator values that make the controller output `duty` with zero error
/// at inductor current `i_l`.
PiState bumpless_state(const PiGains& gains, double i_l, double duty);

struct PiRunOptions {
    /// Default: operating point of the initial load with bumpless integrators.
    std::optional<ConverterState> initial;
    std::optional<PiState> initial_controller;
    int trace_stride = 10;
    PiLimits limits;
};

/// Closed loop with the controller updated every dt. Throws SingularVoltage if
/// the output collapses.
std::vector<TraceRow> run_pi_closed_loop(const ConverterParams& params, const PiGains& gains,
                                         const CplSchedule& schedule, double duration, double dt,
                                         const PiRunOptions& options = {});

}  // namespace buckrl
