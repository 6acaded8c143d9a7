#include "buckrl/converter.hpp"

#include <cmath>

namespace buckrl {

SingularVoltage::SingularVoltage(double v_o)
    : std::runtime_error("SingularVoltage: v_o=" + std::to_string(v_o) + " below floor"), v_o_(v_o) {}

void ConverterParams::validate() const {
    auto require = [](bool ok, const char* field) {
        if (!ok) throw std::invalid_argument(std::string("invalid converter parameter: ") + field);
    };
    require(v_in > 0.0, "v_in");
    require(l_henry > 0.0, "l_henry");
    require(c_farad > 0.0, "c_farad");
    require(f_sw > 0.0, "f_sw");
    require(v_ref > 0.0, "v_ref");
    require(p_cpl >= 0.0, "p_cpl");
    require(v_min > 0.0, "v_min");
    require(!r_ohm || *r_ohm > 0.0, "r_ohm");
}

double cpl_current(double p_cpl, double v_o, double v_min) {
    if (!(v_o >= v_min)) throw SingularVoltage(v_o);
    return p_cpl / v_o;
}

Derivatives derivatives(const ConverterState& s, const ConverterParams& p, double duty) {
    if (!(s.v_o >= p.v_min)) throw SingularVoltage(s.v_o);
    Derivatives d;
    d.di_l = (duty * p.v_in - s.v_o) / p.l_henry;
    // Load current summed the same way operating_point() does, so the residual there is exactly zero.
    const double i_load = p.p_cpl / s.v_o + (p.r_ohm ? s.v_o / *p.r_ohm : 0.0);
    d.dv_o = (s.i_l - i_load) / p.c_farad;
    return d;
}

Derivatives nominal_derivatives(const ConverterState& s, const ConverterParams& n, double duty,
                                const Disturbance& dist) {
    Derivatives d = derivatives(s, n, duty);
    d.di_l += dist.d1;
    d.dv_o += dist.d2;
    return d;
}

ConverterState step_rk4(const ConverterState& s, const ConverterParams& p, double duty, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
    const double h2 = 0.5 * dt;
    const Derivatives k1 = derivatives(s, p, duty);
    const Derivatives k2 = derivatives({s.i_l + h2 * k1.di_l, s.v_o + h2 * k1.dv_o, s.t + h2}, p, duty);
    const Derivatives k3 = derivatives({s.i_l + h2 * k2.di_l, s.v_o + h2 * k2.dv_o, s.t + h2}, p, duty);
    const Derivatives k4 = derivatives({s.i_l + dt * k3.di_l, s.v_o + dt * k3.dv_o, s.t + dt}, p, duty);
    ConverterState out;
    out.i_l = s.i_l + dt / 6.0 * (k1.di_l + 2.0 * k2.di_l + 2.0 * k3.di_l + k4.di_l);
    out.v_o = s.v_o + dt / 6.0 * (k1.dv_o + 2.0 * k2.dv_o + 2.0 * k3.dv_o + k4.dv_o);
    out.t = s.t + dt;
    return out;
}

Disturbance lumped_disturbance(const ConverterParams& n, const ConverterParams& a,
                               const ConverterState& s, double duty) {
    if (!(s.v_o >= n.v_min) || !(s.v_o >= a.v_min)) throw SingularVoltage(s.v_o);
    const double v = s.v_o;
    Disturbance d;
    // The voltage term carries 1/L0 - 1/L so that nominal + d1 reproduces the actual dynamics.
    d.d1 = (a.v_in / a.l_henry - n.v_in / n.l_henry) * duty + (1.0 / n.l_henry - 1.0 / a.l_henry) * v;
    // A missing resistor contributes a zero conductance term on either side.
    const double g_a = a.r_ohm ? 1.0 / (*a.r_ohm * a.c_farad) : 0.0;
    const double g_n = n.r_ohm ? 1.0 / (*n.r_ohm * n.c_farad) : 0.0;
    d.d2 = (1.0 / a.c_farad - 1.0 / n.c_farad) * s.i_l + (-g_a + g_n) * v -
           a.p_cpl / (a.c_farad * v) + n.p_cpl / (n.c_farad * v);
    return d;
}

ConverterState operating_point(const ConverterParams& p) {
    ConverterState s;
    s.v_o = p.v_ref;
    s.i_l = p.p_cpl / p.v_ref + (p.r_ohm ? p.v_ref / *p.r_ohm : 0.0);
    return s;
}

double operating_duty(const ConverterParams& p) { return p.v_ref / p.v_in; }

}  // namespace buckrl
