#include "toy_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace buckrl::testing {

QTable value_iteration(const TabularMdp& mdp, double gamma, double tol) {
    QTable q(mdp.states(), std::vector<double>(mdp.actions(), 0.0));
    for (int iter = 0; iter < 100000; ++iter) {
        double delta = 0.0;
        QTable next = q;
        for (std::size_t s = 0; s < mdp.states(); ++s) {
            if (mdp.terminal[s]) continue;
            for (std::size_t a = 0; a < mdp.actions(); ++a) {
                const std::size_t s2 = mdp.next[s][a];
                const double v2 = mdp.terminal[s2] ? 0.0 : *std::max_element(q[s2].begin(), q[s2].end());
                next[s][a] = mdp.reward[s][a] + gamma * v2;
                delta = std::max(delta, std::abs(next[s][a] - q[s][a]));
            }
        }
        q = std::move(next);
        if (delta < tol) break;
    }
    return q;
}

std::vector<std::size_t> greedy_policy(const QTable& q) {
    std::vector<std::size_t> pi;
    for (const auto& row : q) pi.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
    return pi;
}

TabularMdp chain_mdp() {
    TabularMdp m;
    const std::size_t n = 5;
    m.next.assign(n, std::vector<std::size_t>(3, 0));
    m.reward.assign(n, std::vector<double>(3, 0.0));
    m.terminal.assign(n, false);
    m.terminal[0] = m.terminal[4] = true;
    for (std::size_t s = 0; s < n; ++s) {
        m.next[s][0] = s == 0 ? 0 : s - 1;
        m.next[s][1] = s;
        m.next[s][2] = s == n - 1 ? s : s + 1;
    }
    m.reward[1][0] = 0.85;
    m.reward[3][2] = 1.0;
    return m;
}

TabularMdp two_state_mdp() {
    TabularMdp m;
    m.next = {{0, 1}, {0, 1}};
    m.reward = {{0.0, 1.0}, {2.0, -1.0}};
    m.terminal = {false, false};
    return m;
}

ChainEnv::ChainEnv(std::size_t max_steps)
    : mdp_(chain_mdp()), space_({{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}), max_steps_(max_steps) {}

Observation ChainEnv::encode(std::size_t state) {
    std::array<double, 6> x{};
    x[state] = 1.0;
    return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

Observation ChainEnv::reset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(1, 3);
    state_ = pick(rng);
    steps_ = 0;
    done_ = false;
    return encode(state_);
}

StepResult ChainEnv::step(std::size_t action_index) {
    if (done_) throw EpisodeFinished("chain episode finished");
    space_.at(action_index);
    StepResult r;
    r.reward = mdp_.reward[state_][action_index];
    state_ = mdp_.next[state_][action_index];
    ++steps_;
    r.obs = encode(state_);
    r.terminal = mdp_.terminal[state_];
    r.done = r.terminal || steps_ >= max_steps_;
    done_ = r.done;
    return r;
}

}  // namespace buckrl::testing
