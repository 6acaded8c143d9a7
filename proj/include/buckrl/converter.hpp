#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace buckrl {

/// Thrown when the output voltage falls below the floor where the CPL term
/// P/v_o is no longer trustworthy.
class SingularVoltage : public std::runtime_error {
public:
    explicit SingularVoltage(double v_o);
    double voltage() const noexcept { return v_o_; }

private:
    double v_o_;
};

/// Circuit parameters of the averaged buck stage. Defaults are the nominal
/// circuit: 200 V in, 100 V bus, 2 mH, 150 uF, 20 kHz switching.
struct ConverterParams {
    double v_in = 200.0;
    double l_henry = 2e-3;
    double c_farad = 150e-6;
    std::optional<double> r_ohm;  // absent: no resistive load
    double p_cpl = 300.0;
    double f_sw = 20e3;
    double v_ref = 100.0;
    double v_min = 1.0;

    /// Throws std::invalid_argument naming the first violated field.
    void validate() const;
};

struct ConverterState {
    double i_l = 0.0;
    double v_o = 0.0;
    double t = 0.0;
};

struct Derivatives {
    double di_l = 0.0;
    double dv_o = 0.0;
};

/// Lumped mismatch terms between an actual and a nominal parameter set.
struct Disturbance {
    double d1 = 0.0;  // A/s
    double d2 = 0.0;  // V/s
};

double cpl_current(double p_cpl, double v_o, double v_min = 1.0);

/// Right-hand side of the averaged model. Throws SingularVoltage below v_min.
Derivatives derivatives(const ConverterState& state, const ConverterParams& params, double duty);

/// Same model written as nominal dynamics plus lumped terms.
Derivatives nominal_derivatives(const ConverterState& state, const ConverterParams& nominal,
                                double duty, const Disturbance& d);

/// One classical RK4 step with duty held constant.
ConverterState step_rk4(const ConverterState& state, const ConverterParams& params, double duty,
                        double dt);

Disturbance lumped_disturbance(const ConverterParams& nominal, const ConverterParams& actual,
                               const ConverterState& state, double duty);

/// Inductor current and duty that hold v_o = v_ref for the given load.
ConverterState operating_point(const ConverterParams& params);
double operating_duty(const ConverterParams& params);

}  // namespace buckrl
