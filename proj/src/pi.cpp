#include "buckrl/pi.hpp"

#include <algorithm>
#include <cmath>

namespace buckrl {

PiOutput pi_controller_step(const PiState& state, double v_o, double i_l, double v_ref, const PiGains& gains,
                            double dt, const PiLimits& limits) {
    if (!(dt > 0.0)) throw std::invalid_argument("pi_controller_step: dt must be positive");
    PiState next = state;
    const double e_v = v_ref - v_o;
    next.integ_v += e_v * dt;
    const double i_ref = gains.kvp * e_v + gains.kvi * next.integ_v;
    const double e_c = i_ref - i_l;
    next.integ_c += e_c * dt;
    const double u = gains.kcp * e_c + gains.kci * next.integ_c;

    PiOutput out;
    out.duty = std::clamp(u, limits.d_min, limits.d_max);
    out.i_ref = i_ref;
    out.saturated = u != out.duty;
    const bool winding_up = (u > limits.d_max && e_c > 0.0) || (u < limits.d_min && e_c < 0.0);
    out.state = winding_up ? state : next;
    return out;
}

PiState bumpless_state(const PiGains& gains, double i_l, double duty) {
    PiState s;
    if (gains.kvi != 0.0) s.integ_v = i_l / gains.kvi;
    if (gains.kci != 0.0) s.integ_c = duty / gains.kci;
    return s;
}

std::vector<TraceRow> run_pi_closed_loop(const ConverterParams& params, const PiGains& gains,
                                         const CplSchedule& schedule, double duration, double dt,
                                         const PiRunOptions& options) {
    params.validate();
    if (!(dt > 0.0) || !(duration > 0.0)) throw std::invalid_argument("run_pi_closed_loop: bad dt or duration");
    schedule.validate(duration);

    ConverterParams p = params;
    p.p_cpl = schedule.power_at(0.0, params.p_cpl);
    ConverterState x = options.initial.value_or(operating_point(p));
    x.t = 0.0;
    PiState ctrl = options.initial_controller.value_or(bumpless_state(gains, x.i_l, operating_duty(p)));

    const long long steps = std::llround(duration / dt);
    std::vector<TraceRow> trace;
    if (options.trace_stride > 0) trace.reserve(static_cast<std::size_t>(steps / options.trace_stride + 2));

    auto record = [&](double duty) {
        TraceRow row;
        row.t = x.t;
        row.v_o = x.v_o;
        row.i_l = x.i_l;
        row.duty = duty;
        row.p_cpl = p.p_cpl;
        row.e = x.v_o - params.v_ref;
        trace.push_back(row);
    };

    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        p.p_cpl = schedule.power_at(t, params.p_cpl);
        const PiOutput out = pi_controller_step(ctrl, x.v_o, x.i_l, params.v_ref, gains, dt, options.limits);
        ctrl = out.state;
        if (k == 0 && options.trace_stride > 0) record(out.duty);
        x = step_rk4(x, p, out.duty, dt);
        x.t = static_cast<double>(k + 1) * dt;
        if (options.trace_stride > 0 && (k + 1) % options.trace_stride == 0) record(out.duty);
    }
    return trace;
}

}  // namespace buckrl
