#include "buckrl/env.hpp"

#include <algorithm>
#include <cmath>

namespace buckrl {

ActionSpace::ActionSpace(std::vector<ActionDelta> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("action space must be non-empty");
    const auto it = std::find(entries_.begin(), entries_.end(), ActionDelta{0.0, 0.0});
    if (it == entries_.end()) throw std::invalid_argument("action space must contain the null action");
    null_index_ = static_cast<std::size_t>(it - entries_.begin());
}

ActionSpace ActionSpace::grid(double dlevel, double damplitude) {
    std::vector<ActionDelta> entries;
    for (double l : {-dlevel, 0.0, dlevel})
        for (double a : {-damplitude, 0.0, damplitude}) entries.push_back({l, a});
    return ActionSpace(std::move(entries));
}

ActionSpace ActionSpace::two_speed(double fine, double coarse, double damplitude) {
    return ActionSpace({{-coarse, 0.0},
                        {-fine, 0.0},
                        {0.0, 0.0},
                        {fine, 0.0},
                        {coarse, 0.0},
                        {0.0, -damplitude},
                        {0.0, damplitude}});
}

const ActionDelta& ActionSpace::at(std::size_t index) const {
    if (index >= entries_.size())
        throw IndexOutOfRange("action index " + std::to_string(index) + " outside space of size " +
                              std::to_string(entries_.size()));
    return entries_[index];
}

CarrierCommand apply_action(const CarrierCommand& carrier, std::size_t action_index, const ActionSpace& space,
                            const CarrierLimits& limits) {
    const ActionDelta& d = space.at(action_index);
    CarrierCommand out;
    out.level = std::clamp(carrier.level + d.dlevel, 0.0, 1.0);
    out.amplitude = std::clamp(carrier.amplitude + d.damplitude, 0.0, limits.amp_max);
    return out;
}

double triangle(double phase) {
    const double p = phase - std::floor(phase);
    return p < 0.5 ? -1.0 + 4.0 * p : 3.0 - 4.0 * p;
}

double duty_of(const CarrierCommand& carrier, double t, double f_tri, const CarrierLimits& limits) {
    const double raw = carrier.level + carrier.amplitude * triangle(t * f_tri);
    return std::clamp(raw, limits.d_min, limits.d_max);
}

void RewardParams::validate() const {
    if (!(alpha > 0 && beta > 0 && omega > 0 && r_cap > 0 && eps_floor > 0))
        throw std::invalid_argument("reward parameters must all be positive");
}

double reward(double e, const RewardParams& p) {
    const double mag = std::abs(e);
    if (mag < p.omega) return std::min(p.beta / std::max(mag, p.eps_floor), p.r_cap);
    return -p.alpha * mag;
}

double CplSchedule::power_at(double t, double fallback) const {
    double p = fallback;
    for (const auto& [time, watts] : steps) {
        if (time <= t + 1e-12)
            p = watts;
        else
            break;
    }
    return p;
}

void CplSchedule::validate(double duration) const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto [time, watts] = steps[i];
        if (time < 0.0 || time >= duration) throw std::invalid_argument("CPL schedule time outside [0, duration)");
        if (i > 0 && !(time > steps[i - 1].first))
            throw std::invalid_argument("CPL schedule times must be strictly increasing");
        if (watts < 0.0) throw std::invalid_argument("CPL schedule power must be non-negative");
    }
}

int EpisodeConfig::substeps() const { return static_cast<int>(std::lround(control_period / sim_dt)); }

int EpisodeConfig::control_steps() const { return static_cast<int>(std::lround(duration / control_period)); }

void EpisodeConfig::validate() const {
    if (!(duration > 0)) throw std::invalid_argument("episode duration must be positive");
    if (!(sim_dt > 0)) throw std::invalid_argument("sim_dt must be positive");
    if (!(control_period >= sim_dt)) throw std::invalid_argument("control_period must be >= sim_dt");
    const double ratio = control_period / sim_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio)
        throw std::invalid_argument("control_period must be an integer multiple of sim_dt");
    if (!(f_tri > 0)) throw std::invalid_argument("f_tri must be positive");
    if (!(abort_band > 0)) throw std::invalid_argument("abort_band must be positive");
    if (!(init_v_lo > 0 && init_v_hi >= init_v_lo)) throw std::invalid_argument("bad initial voltage range");
    if (cpl_schedule.empty() && cpl_choices.empty()) throw std::invalid_argument("no CPL schedule or choices");
    if (cpl_step_probability < 0 || cpl_step_probability > 1)
        throw std::invalid_argument("cpl_step_probability must be in [0,1]");
    cpl_schedule.validate(duration);
}

BuckEnv::BuckEnv(ConverterParams params, EpisodeConfig config, ActionSpace space, RewardParams reward)
    : params_(std::move(params)), config_(std::move(config)), space_(std::move(space)), reward_(reward) {
    params_.validate();
    config_.validate();
    reward_.validate();
}

Observation BuckEnv::reset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    schedule_ = config_.cpl_schedule;
    if (schedule_.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, config_.cpl_choices.size() - 1);
        const double p0 = config_.cpl_choices[pick(rng)];
        schedule_.steps.push_back({0.0, p0});
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (config_.cpl_choices.size() > 1 && coin(rng) < config_.cpl_step_probability) {
            double p1 = p0;
            while (p1 == p0) p1 = config_.cpl_choices[pick(rng)];
            std::uniform_real_distribution<double> when(config_.cpl_step_t_lo, config_.cpl_step_t_hi);
            // Align the edge to the simulator grid so replays are exact.
            const double t_step = std::round(when(rng) / config_.sim_dt) * config_.sim_dt;
            if (t_step > 0.0 && t_step < config_.duration) schedule_.steps.push_back({t_step, p1});
        }
    }

    ConverterState s;
    if (config_.init_mode != InitMode::OperatingPoint) {
        std::uniform_real_distribution<double> v(config_.init_v_lo, config_.init_v_hi);
        s.v_o = v(rng) * params_.v_ref;
        s.i_l = config_.init_i_l;
        if (config_.init_mode == InitMode::UniformMatched) {
            ConverterParams p = params_;
            p.p_cpl = schedule_.power_at(0.0, params_.p_cpl);
            s.i_l = cpl_current(p.p_cpl, s.v_o, p.v_min) + (p.r_ohm ? s.v_o / *p.r_ohm : 0.0);
        }
    } else {
        ConverterParams p = params_;
        p.p_cpl = schedule_.power_at(0.0, params_.p_cpl);
        s = operating_point(p);
    }
    return start(s, {operating_duty(params_), config_.initial_amplitude});
}

Observation BuckEnv::reset_to(const ConverterState& state, const CarrierCommand& carrier,
                              const CplSchedule& schedule) {
    schedule.validate(config_.duration);
    schedule_ = schedule;
    return start(state, carrier);
}

Observation BuckEnv::start(const ConverterState& state, const CarrierCommand& carrier) {
    state_ = state;
    state_.t = 0.0;
    carrier_ = carrier;
    substep_count_ = 0;
    control_count_ = 0;
    done_ = false;
    trace_.clear();

    Observation o;
    o.v_o = state_.v_o;
    o.v_o_delay = state_.v_o;
    o.e = state_.v_o - params_.v_ref;
    o.e_delay = o.e;
    last_obs_ = o;

    if (config_.trace_stride > 0) {
        TraceRow row;
        row.v_o = state_.v_o;
        row.i_l = state_.i_l;
        row.duty = duty_of(carrier_, 0.0, config_.f_tri, config_.limits);
        row.p_cpl = schedule_.power_at(0.0, params_.p_cpl);
        row.e = o.e;
        trace_.push_back(row);
    }
    return o;
}

StepResult BuckEnv::step(std::size_t action_index) {
    if (done_) throw EpisodeFinished("step called on a finished episode");
    carrier_ = apply_action(carrier_, action_index, space_, config_.limits);

    const int n = config_.substeps();
    const double dt = config_.sim_dt;
    const std::size_t trace_begin = trace_.size();
    ConverterParams p = params_;
    StepResult res;
    double v_prev_sub = state_.v_o;

    for (int j = 0; j < n; ++j) {
        const double t = static_cast<double>(substep_count_) * dt;
        p.p_cpl = schedule_.power_at(t, params_.p_cpl);
        const double duty = duty_of(carrier_, t, config_.f_tri, config_.limits);
        res.duty = duty;
        try {
            v_prev_sub = state_.v_o;
            state_ = step_rk4(state_, p, duty, dt);
        } catch (const SingularVoltage&) {
            res.singular = true;
            break;
        }
        ++substep_count_;
        state_.t = static_cast<double>(substep_count_) * dt;
        if (config_.trace_stride > 0 && substep_count_ % config_.trace_stride == 0) {
            TraceRow row;
            row.t = state_.t;
            row.v_o = state_.v_o;
            row.i_l = state_.i_l;
            row.duty = duty;
            row.p_cpl = p.p_cpl;
            row.e = state_.v_o - params_.v_ref;
            trace_.push_back(row);
        }
    }
    ++control_count_;

    Observation o;
    o.v_o = state_.v_o;
    o.v_o_delay = last_obs_.v_o;
    o.e = state_.v_o - params_.v_ref;
    o.e_delay = last_obs_.e;
    if (config_.derivative_mode == DerivativeMode::ControlPeriod || res.singular)
        o.dv_o_dt = (o.v_o - o.v_o_delay) / config_.control_period;
    else
        o.dv_o_dt = (o.v_o - v_prev_sub) / dt;
    o.de_dt = o.dv_o_dt;
    last_obs_ = o;

    res.obs = o;
    res.t = state_.t;
    res.aborted = res.singular || std::abs(o.e) > config_.abort_band;
    const double e_clamped = std::clamp(o.e, -config_.abort_band, config_.abort_band);
    res.reward = res.singular ? -reward_.alpha * config_.abort_band : reward(e_clamped, reward_);
    res.terminal = res.aborted;
    res.done = res.aborted || control_count_ >= config_.control_steps();
    done_ = res.done;

    for (std::size_t k = trace_begin; k < trace_.size(); ++k) {
        trace_[k].reward = res.reward;
        trace_[k].action_index = static_cast<long>(action_index);
    }
    return res;
}

}  // namespace buckrl
