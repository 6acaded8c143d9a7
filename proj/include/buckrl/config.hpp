#pragma once

#include "buckrl/agent.hpp"
#include "buckrl/converter.hpp"
#include "buckrl/env.hpp"
#include "buckrl/metrics.hpp"
#include "buckrl/pi.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace buckrl {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, int line, const std::string& message);
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

/// Flat `[section]` / `key = value` document; `#` starts a comment.
struct ConfigDocument {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries;  // "section.key"

    static ConfigDocument parse(const std::string& text);
    static ConfigDocument load(const std::string& path);
};

enum class ActionPreset { TwoSpeed, Grid };

struct ActionConfig {
    ActionPreset preset = ActionPreset::TwoSpeed;
    double fine = 0.005;
    double coarse = 0.1;
    double damplitude = 0.005;

    ActionSpace build() const;
    /// Largest level increment; used to scale the action encoding.
    double unit() const;
};

/// Snapshot selection during training; see SnapshotSelection.
struct SelectionConfig {
    std::size_t every = 50;    // episodes between validations; 0 keeps the final network
    std::size_t episodes = 8;  // greedy validation episodes per check
};

struct SweepConfig {
    std::vector<Topology> topologies;
    std::vector<std::pair<double, double>> rewards;  // (alpha, beta)
    std::size_t seeds = 1;
};

/// Everything a run needs, with defaults for every field except train.episodes.
struct RunConfig {
    ConverterParams circuit;
    EpisodeConfig episode = default_episode();
    ActionConfig actions;
    RewardParams reward = default_reward();
    Hyperparams agent = default_agent();
    std::size_t episodes = 0;
    bool has_episodes = false;
    SelectionConfig selection;
    PiGains pi;
    MetricsOptions metrics;
    SweepConfig sweep;

    FeatureMap features() const { return FeatureMap::buck(circuit.v_ref, actions.unit()); }

    /// Training defaults tuned for the buck converter; differ from the generic ones.
    static EpisodeConfig default_episode();
    static Hyperparams default_agent();
    static RewardParams default_reward();

    static RunConfig from_document(const ConfigDocument& doc);
    static RunConfig load(const std::string& path);
    /// Throws ConfigError naming any field a training run cannot default.
    void require_training_fields() const;
    /// Canonical `key = value` rendering, readable back by load().
    std::string echo() const;
};

}  // namespace buckrl
