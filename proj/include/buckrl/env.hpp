#pragma once

#include "buckrl/converter.hpp"
#include "buckrl/trace.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace buckrl {

/// Six-component MDP state: voltage, its delayed copy, its rate, and the same
/// three signals for the tracking error.
struct Observation {
    double v_o = 0.0;
    double v_o_delay = 0.0;
    double dv_o_dt = 0.0;
    double e = 0.0;
    double e_delay = 0.0;
    double de_dt = 0.0;

    static constexpr std::size_t size = 6;
    std::array<double, size> as_array() const { return {v_o, v_o_delay, dv_o_dt, e, e_delay, de_dt}; }

    bool operator==(const Observation&) const = default;
};

/// Level and amplitude of the triangular duty sequence.
struct CarrierCommand {
    double level = 0.5;
    double amplitude = 0.05;

    bool operator==(const CarrierCommand&) const = default;
};

struct CarrierLimits {
    double amp_max = 0.2;
    double d_min = 0.01;
    double d_max = 0.99;
};

struct ActionDelta {
    double dlevel = 0.0;
    double damplitude = 0.0;

    bool operator==(const ActionDelta&) const = default;
};

class IndexOutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Ordered, finite set of carrier increments. Index order is stable.
class ActionSpace {
public:
    explicit ActionSpace(std::vector<ActionDelta> entries);

    /// {-dl, 0, +dl} x {-da, 0, +da}, level-major.
    static ActionSpace grid(double dlevel, double damplitude);
    /// Level moves {0, +-fine, +-coarse} plus amplitude-only moves +-damplitude.
    static ActionSpace two_speed(double fine, double coarse, double damplitude);

    std::size_t size() const noexcept { return entries_.size(); }
    const ActionDelta& at(std::size_t index) const;
    std::span<const ActionDelta> entries() const noexcept { return entries_; }
    std::size_t null_index() const noexcept { return null_index_; }

private:
    std::vector<ActionDelta> entries_;
    std::size_t null_index_ = 0;
};

CarrierCommand apply_action(const CarrierCommand& carrier, std::size_t action_index,
                            const ActionSpace& space, const CarrierLimits& limits = {});

/// Unit triangle wave of period 1: -1 at phase 0, +1 at phase 0.5.
double triangle(double phase);

double duty_of(const CarrierCommand& carrier, double t, double f_tri, const CarrierLimits& limits = {});

struct RewardParams {
    double alpha = 1e-2;
    double beta = 1e-3;
    double omega = 0.5;
    double r_cap = 1.0;
    double eps_floor = 1e-3;

    void validate() const;
};

/// Positive inside the tracking band, linear penalty outside.
double reward(double e, const RewardParams& params);

/// Piecewise-constant CPL power; each entry switches the load at its time.
struct CplSchedule {
    std::vector<std::pair<double, double>> steps;  // (seconds, watts), strictly increasing times

    bool empty() const noexcept { return steps.empty(); }
    double power_at(double t, double fallback) const;
    void validate(double duration) const;
};

enum class DerivativeMode {
    ControlPeriod,  // backward difference over one control period
    SubStep,        // backward difference over the last simulator step
};

enum class InitMode {
    Uniform,         // v_o ~ U[init_v_lo, init_v_hi] * v_ref, i_l = init_i_l
    UniformMatched,  // same voltage draw, i_l equal to the load current at that voltage
    OperatingPoint,  // equilibrium for the initial load
};

struct EpisodeConfig {
    double duration = 0.05;
    double control_period = 1e-4;
    double sim_dt = 1e-6;
    double f_tri = 20e3;
    double abort_band = 50.0;
    double initial_amplitude = 0.05;
    DerivativeMode derivative_mode = DerivativeMode::SubStep;

    InitMode init_mode = InitMode::UniformMatched;
    double init_v_lo = 0.6;
    double init_v_hi = 1.0;
    double init_i_l = 0.0;

    /// Used verbatim when non-empty; otherwise the load is drawn per episode.
    CplSchedule cpl_schedule;
    std::vector<double> cpl_choices{300.0, 500.0, 900.0};
    /// Probability that a drawn episode also gets one load step to another choice.
    double cpl_step_probability = 0.0;
    double cpl_step_t_lo = 0.01;
    double cpl_step_t_hi = 0.04;

    /// Simulator steps between recorded trace rows; 0 disables recording.
    int trace_stride = 0;

    CarrierLimits limits;

    int substeps() const;
    int control_steps() const;
    void validate() const;
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
    bool terminal = false;  // ended in a terminal state rather than at the time limit
    bool aborted = false;   // terminal because of a failure
    bool singular = false;
    double t = 0.0;
    double duty = 0.0;
};

class EpisodeFinished : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Interface the trainer drives; the buck environment is one implementation,
/// tests swap in toy MDPs.
class Environment {
public:
    virtual ~Environment() = default;
    virtual Observation reset(std::uint64_t seed) = 0;
    virtual StepResult step(std::size_t action_index) = 0;
    virtual const ActionSpace& action_space() const = 0;
};

class BuckEnv final : public Environment {
public:
    BuckEnv(ConverterParams params, EpisodeConfig config, ActionSpace space, RewardParams reward);

    Observation reset(std::uint64_t seed) override;
    StepResult step(std::size_t action_index) override;
    const ActionSpace& action_space() const override { return space_; }

    /// Starts from an explicit plant state and carrier, bypassing the draw.
    Observation reset_to(const ConverterState& state, const CarrierCommand& carrier,
                         const CplSchedule& schedule);

    const ConverterState& plant() const noexcept { return state_; }
    const CarrierCommand& carrier() const noexcept { return carrier_; }
    const ConverterParams& params() const noexcept { return params_; }
    const EpisodeConfig& config() const noexcept { return config_; }
    const CplSchedule& schedule() const noexcept { return schedule_; }
    const RewardParams& reward_params() const noexcept { return reward_; }
    bool done() const noexcept { return done_; }

    const std::vector<TraceRow>& trace() const noexcept { return trace_; }

private:
    Observation start(const ConverterState& state, const CarrierCommand& carrier);

    ConverterParams params_;
    EpisodeConfig config_;
    ActionSpace space_;
    RewardParams reward_;

    ConverterState state_;
    CarrierCommand carrier_;
    CplSchedule schedule_;
    Observation last_obs_;
    long long substep_count_ = 0;
    int control_count_ = 0;
    bool done_ = true;
    std::vector<TraceRow> trace_;
};

}  // namespace buckrl
