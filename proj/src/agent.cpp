#include "buckrl/agent.hpp"

#include "buckrl/kernels.hpp"
#include "buckrl/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <omp.h>
#include <ostream>

namespace buckrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 1u << 20));
}

void ReplayBuffer::push(const Transition& t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(t);
    } else {
        storage_[head_] = t;
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= storage_.size()) throw std::out_of_range("replay index out of range");
    // Until the ring wraps head_ stays 0 and storage order is insertion order.
    return storage_[(head_ + i) % storage_.size()];
}

void ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng, std::vector<std::size_t>& out) const {
    if (storage_.empty())
        throw InsufficientSamples("replay is empty, cannot sample " + std::to_string(count));
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    out.resize(count);
    for (auto& i : out) i = pick(rng);
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
    std::vector<std::size_t> idx;
    sample_indices(count, rng, idx);
    std::vector<Transition> out;
    out.reserve(count);
    for (std::size_t i : idx) out.push_back(storage_[i]);
    return out;
}

StateInput FeatureMap::encode(const Observation& o) const {
    const auto raw = o.as_array();
    StateInput x;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (raw[i] - offset[i]) / scale[i];
    return x;
}

ActionInput FeatureMap::encode(const ActionDelta& a) const {
    return {a.dlevel / action_scale[0], a.damplitude / action_scale[1]};
}

std::vector<ActionInput> FeatureMap::encode(const ActionSpace& space) const {
    std::vector<ActionInput> out;
    out.reserve(space.size());
    for (const ActionDelta& a : space.entries()) out.push_back(encode(a));
    return out;
}

FeatureMap FeatureMap::buck(double v_ref, double action_unit) {
    FeatureMap f;
    f.offset = {v_ref, v_ref, 0.0, 0.0, 0.0, 0.0};
    f.scale = {10.0, 10.0, 2e4, 10.0, 10.0, 2e4};
    f.action_scale = {action_unit, action_unit};
    return f;
}

void Hyperparams::validate() const {
    if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must be in (0,1)");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(epsilon >= 0 && epsilon <= 1)) throw std::invalid_argument("epsilon must be in [0,1]");
    if (target_sync_period == 0) throw std::invalid_argument("target_sync_period must be positive");
    if (train_steps_per_env_step == 0) throw std::invalid_argument("train_steps_per_env_step must be positive");
    if (replay_capacity == 0) throw std::invalid_argument("replay_capacity must be positive");
}

std::size_t greedy_action(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions) {
    std::vector<double> q(actions.size());
    q_values(net, s, actions, q);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::size_t select_action(const QNetwork& net, const Observation& obs, const ActionSpace& space,
                          const FeatureMap& features, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
        return pick(rng);
    }
    const auto actions = features.encode(space);
    return greedy_action(net, features.encode(obs), actions);
}

double compute_target(const Transition& t, const QNetwork& target_net, const ActionSpace& space,
                      const FeatureMap& features, double gamma) {
    if (t.done) return t.absorbing ? t.r / (1.0 - gamma) : t.r;
    const auto actions = features.encode(space);
    std::vector<double> q(actions.size());
    q_values(target_net, features.encode(t.s_next), actions, q);
    return t.r + gamma * *std::max_element(q.begin(), q.end());
}

void sync_target(const QNetwork& net, QNetwork& target_net) {
    if (!(net.topology == target_net.topology)) throw DimensionMismatch("sync_target: topology mismatch");
    target_net = net;
}

DqnTrainer::DqnTrainer(Hyperparams hp, FeatureMap features, const ActionSpace& space, std::uint64_t seed)
    : hp_(std::move(hp)),
      features_(features),
      space_(space),
      action_inputs_(features.encode(space)),
      net_(init_network(derive_seed(seed, streams::kNetInit, 0), hp_.topology)),
      target_(net_),
      buffer_(hp_.replay_capacity),
      rng_(derive_seed(seed, streams::kAgent, 0)) {
    hp_.validate();
}

void DqnTrainer::apply_update(const Gradient& grad) {
    if (hp_.optimizer == OptimizerKind::Sgd) {
        sgd_update_in_place(net_, grad, hp_.lr);
        return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<double> theta = flatten(net_);
    const std::vector<double> g = flatten(grad);
    if (adam_m_.empty()) {
        adam_m_.assign(theta.size(), 0.0);
        adam_v_.assign(theta.size(), 0.0);
    }
    const double t = static_cast<double>(train_steps_);
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        adam_m_[k] = b1 * adam_m_[k] + (1 - b1) * g[k];
        adam_v_[k] = b2 * adam_v_[k] + (1 - b2) * g[k] * g[k];
        theta[k] -= hp_.lr * (adam_m_[k] / c1) / (std::sqrt(adam_v_[k] / c2) + eps);
    }
    unflatten(theta, net_);
}

double DqnTrainer::train_step() {
    const std::size_t need = std::max(hp_.batch_size, hp_.warmup_steps);
    if (buffer_.size() < need)
        throw InsufficientSamples("train_step needs " + std::to_string(need) + " transitions, have " +
                                  std::to_string(buffer_.size()));
    buffer_.sample_indices(hp_.batch_size, rng_, idx_);

    samples_.resize(idx_.size());
    next_states_.clear();
    for (std::size_t i = 0; i < idx_.size(); ++i) {
        const Transition& t = buffer_.slot(idx_[i]);
        samples_[i].s = features_.encode(t.s);
        samples_[i].a = action_inputs_[t.a];
        if (!t.done) next_states_.push_back(features_.encode(t.s_next));
    }
    next_max_.resize(next_states_.size());
    // Both kernel flavours agree bitwise; the threaded one only pays off with more than one core.
    const bool threaded = omp_get_max_threads() > 1;
    if (threaded)
        batch_max_q_parallel(target_, next_states_, action_inputs_, next_max_);
    else
        batch_max_q_serial(target_, next_states_, action_inputs_, next_max_);
    for (std::size_t i = 0, k = 0; i < idx_.size(); ++i) {
        const Transition& t = buffer_.slot(idx_[i]);
        if (t.done)
            samples_[i].target = t.absorbing ? t.r / (1.0 - hp_.gamma) : t.r;
        else
            samples_[i].target = t.r + hp_.gamma * next_max_[k++];
    }

    const double loss = threaded ? batch_loss_parallel(net_, samples_) : batch_loss_serial(net_, samples_);
    const Gradient grad =
        threaded ? batch_gradient_parallel(net_, samples_) : batch_gradient_serial(net_, samples_);
    ++train_steps_;
    apply_update(grad);
    return loss;
}

CurvePoint DqnTrainer::run_episode(Environment& env, std::size_t episode_index, std::uint64_t env_seed) {
    CurvePoint pt;
    pt.episode = episode_index;
    pt.epsilon = hp_.epsilon;
    Observation obs = env.reset(env_seed);
    std::vector<double> abs_err;
    double reward_sum = 0.0, loss_sum = 0.0;
    std::size_t n_loss = 0;
    const std::size_t need = std::max(hp_.batch_size, hp_.warmup_steps);

    bool done = false;
    while (!done) {
        const std::size_t a = select_action(net_, obs, space_, features_, hp_.epsilon, rng_);
        const StepResult res = env.step(a);
        buffer_.push({obs, a, res.reward, res.obs, res.terminal, res.aborted && hp_.absorbing_aborts});
        ++env_steps_;
        reward_sum += res.reward;
        abs_err.push_back(std::abs(res.obs.e));
        if (buffer_.size() >= need) {
            for (std::size_t k = 0; k < hp_.train_steps_per_env_step; ++k) {
                loss_sum += train_step();
                ++n_loss;
            }
        }
        if (env_steps_ % hp_.target_sync_period == 0) {
            sync_target();
            ++sync_count_;
        }
        if (on_env_step) on_env_step(*this);
        obs = res.obs;
        done = res.done;
        pt.aborted = res.aborted;
    }

    pt.steps = env_steps_;
    pt.mean_reward = reward_sum / static_cast<double>(abs_err.size());
    const std::size_t tail = std::max<std::size_t>(1, abs_err.size() / 5);
    double acc = 0.0;
    for (std::size_t i = abs_err.size() - tail; i < abs_err.size(); ++i) acc += abs_err[i];
    pt.mean_abs_error = acc / static_cast<double>(tail);
    pt.has_loss = n_loss > 0;
    pt.loss_mean = n_loss > 0 ? loss_sum / static_cast<double>(n_loss) : 0.0;
    return pt;
}

TrainResult train(Environment& env, const Hyperparams& hp, const FeatureMap& features, std::uint64_t seed,
                  std::size_t episodes, const SnapshotSelection& selection) {
    DqnTrainer trainer(hp, features, env.action_space(), seed);
    TrainResult out;
    out.curve.reserve(episodes);
    const bool selecting = selection.every > 0 && selection.score;
    auto consider = [&](std::size_t done) {
        const double score = selection.score(trainer.network());
        // Ties keep the earlier snapshot.
        if (!out.selected_after || score > out.selected_score) {
            out.net = trainer.network();
            out.selected_after = done;
            out.selected_score = score;
        }
    };
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        out.curve.push_back(trainer.run_episode(env, ep, derive_seed(seed, streams::kEpisode, ep)));
        if (selecting && (ep + 1) % selection.every == 0) consider(ep + 1);
    }
    if (selecting && episodes > 0 && episodes % selection.every != 0) consider(episodes);
    if (!selecting || episodes == 0) {
        out.net = trainer.network();
        out.selected_after.reset();
    }

    if (episodes >= 10) {
        const std::size_t late = std::max<std::size_t>(1, episodes / 5);
        std::size_t aborted = 0;
        for (std::size_t i = episodes - late; i < episodes; ++i) aborted += out.curve[i].aborted ? 1 : 0;
        if (static_cast<double>(aborted) > 0.9 * static_cast<double>(late))
            throw AbortedTooOften("AbortedTooOften: " + std::to_string(aborted) + " of the last " +
                                      std::to_string(late) + " episodes aborted",
                                  out.net, out.curve);
    }
    return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "episode,steps,mean_reward,mean_abs_error,epsilon,loss_mean\n";
    out << std::setprecision(10);
    for (const CurvePoint& p : curve) {
        out << p.episode << ',' << p.steps << ',' << p.mean_reward << ',' << p.mean_abs_error << ',' << p.epsilon
            << ',';
        if (p.has_loss) out << p.loss_mean;
        out << '\n';
    }
}

double discounted_return(std::span<const double> rewards, double gamma) {
    double ret = 0.0, discount = 1.0;
    for (double r : rewards) {
        ret += discount * r;
        discount *= gamma;
    }
    return ret;
}

}  // namespace buckrl
