#pragma once

#include "buckrl/env.hpp"
#include "buckrl/qnet.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace buckrl {

struct Transition {
    Observation s;
    std::size_t a = 0;
    double r = 0.0;
    Observation s_next;
    bool done = false;  // true only when the episode terminated (not on time-limit truncation)
    // Terminal failure treated as a state that keeps paying r forever: target r / (1 - gamma).
    bool absorbing = false;
};

class InsufficientSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring of transitions with uniform sampling (with replacement,
/// so any non-empty buffer can serve a batch of any size).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);
    std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;
    void sample_indices(std::size_t count, std::mt19937_64& rng, std::vector<std::size_t>& out) const;

    std::size_t size() const noexcept { return storage_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    /// i-th oldest entry.
    const Transition& at(std::size_t i) const;
    const Transition& slot(std::size_t raw) const { return storage_[raw]; }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> storage_;
};

/// Affine map from physical observations and action increments to network inputs.
struct FeatureMap {
    StateInput offset{};
    StateInput scale{1, 1, 1, 1, 1, 1};
    ActionInput action_scale{1, 1};

    StateInput encode(const Observation& o) const;
    ActionInput encode(const ActionDelta& a) const;
    std::vector<ActionInput> encode(const ActionSpace& space) const;

    static FeatureMap identity() { return {}; }
    /// Centres voltages on v_ref; rates in units of 2e4 V/s.
    static FeatureMap buck(double v_ref, double action_unit);
};

enum class OptimizerKind { Sgd, Adam };

struct Hyperparams {
    double lr = 1e-3;
    double gamma = 0.9;
    std::size_t batch_size = 256;
    double epsilon = 0.1;
    std::size_t target_sync_period = 500;
    std::size_t warmup_steps = 1280;
    std::size_t train_steps_per_env_step = 1;
    std::size_t replay_capacity = 100000;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    // Aborted episodes end in an absorbing failure state rather than a zero-value terminal.
    bool absorbing_aborts = true;
    Topology topology;

    void validate() const;
};

/// Explore with probability epsilon, otherwise argmax with ties to the lowest index.
std::size_t select_action(const QNetwork& net, const Observation& obs, const ActionSpace& space,
                          const FeatureMap& features, double epsilon, std::mt19937_64& rng);

std::size_t greedy_action(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions);

/// Bootstrapped target; a terminal transition never touches target_net.
double compute_target(const Transition& t, const QNetwork& target_net, const ActionSpace& space,
                      const FeatureMap& features, double gamma);

void sync_target(const QNetwork& net, QNetwork& target_net);

struct CurvePoint {
    std::size_t episode = 0;
    std::size_t steps = 0;
    double mean_reward = 0.0;
    double mean_abs_error = 0.0;
    double epsilon = 0.0;
    double loss_mean = 0.0;
    bool has_loss = false;
    bool aborted = false;
};

class AbortedTooOften : public std::runtime_error {
public:
    AbortedTooOften(const std::string& what, QNetwork net, std::vector<CurvePoint> curve)
        : std::runtime_error(what), net_(std::move(net)), curve_(std::move(curve)) {}
    const QNetwork& network() const noexcept { return net_; }
    const std::vector<CurvePoint>& curve() const noexcept { return curve_; }

private:
    QNetwork net_;
    std::vector<CurvePoint> curve_;
};

/// Owns the online and target networks, replay memory and RNG of one run.
class DqnTrainer {
public:
    DqnTrainer(Hyperparams hp, FeatureMap features, const ActionSpace& space, std::uint64_t seed);

    /// Samples a batch, regresses onto bootstrapped targets, and
    /// applies one optimizer step. Returns the pre-update loss.
    double train_step();
    void sync_target() { buckrl::sync_target(net_, target_); }
    CurvePoint run_episode(Environment& env, std::size_t episode_index, std::uint64_t env_seed);

    QNetwork& network() noexcept { return net_; }
    const QNetwork& network() const noexcept { return net_; }
    const QNetwork& target_network() const noexcept { return target_; }
    ReplayBuffer& buffer() noexcept { return buffer_; }
    std::mt19937_64& rng() noexcept { return rng_; }
    const Hyperparams& hyperparams() const noexcept { return hp_; }
    std::size_t env_steps() const noexcept { return env_steps_; }
    std::size_t train_steps() const noexcept { return train_steps_; }
    std::size_t sync_count() const noexcept { return sync_count_; }

    /// Called after each environment step; lets tests audit bookkeeping.
    std::function<void(const DqnTrainer&)> on_env_step;

private:
    void apply_update(const Gradient& grad);

    Hyperparams hp_;
    FeatureMap features_;
    ActionSpace space_;
    std::vector<ActionInput> action_inputs_;
    QNetwork net_;
    QNetwork target_;
    ReplayBuffer buffer_;
    std::mt19937_64 rng_;
    std::size_t env_steps_ = 0;
    std::size_t train_steps_ = 0;
    std::size_t sync_count_ = 0;

    // Adam moments, flattened.
    std::vector<double> adam_m_, adam_v_;

    std::vector<std::size_t> idx_;
    std::vector<Sample> samples_;
    std::vector<StateInput> next_states_;
    std::vector<double> next_max_;
};

struct TrainResult {
    QNetwork net;
    std::vector<CurvePoint> curve;
    // Set when snapshot selection picked `net`: episodes completed at that point and its score.
    std::optional<std::size_t> selected_after;
    double selected_score = 0.0;
};

/// Keeps the best network seen during training instead of the last one. The
/// network is scored every `every` episodes (and at the end); higher is better.
struct SnapshotSelection {
    std::size_t every = 0;  // 0 disables selection
    std::function<double(const QNetwork&)> score;
};

/// Runs `episodes` episodes of interaction and learning; reproducible from seed.
/// Throws AbortedTooOften when more than 90% of the last fifth of episodes abort.
TrainResult train(Environment& env, const Hyperparams& hp, const FeatureMap& features, std::uint64_t seed,
                  std::size_t episodes, const SnapshotSelection& selection = {});

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

/// Discounted return of a reward sequence, accumulated front to back.
double discounted_return(std::span<const double> rewards, double gamma);

}  // namespace buckrl
