#include "buckrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace buckrl {

ConfigError::ConfigError(const std::string& field, int line, const std::string& message)
    : std::runtime_error("ConfigError: " + (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         "field '" + field + "': " + message),
      field_(field),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, r.ptr};
}

double to_double(const std::string& key, const std::string& v, int line) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) throw ConfigError(key, line, "expected a number, got '" + v + "'");
    return out;
}

std::size_t to_count(const std::string& key, const std::string& v, int line) {
    std::size_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
        throw ConfigError(key, line, "expected a non-negative integer, got '" + v + "'");
    return out;
}

struct Field {
    std::string key;
    std::function<void(const std::string&, int)> set;
    std::function<std::string()> get;
};

Field num(const std::string& key, double& ref) {
    return {key, [&ref, key](const std::string& v, int line) { ref = to_double(key, v, line); },
            [&ref] { return fmt(ref); }};
}

Field count(const std::string& key, std::size_t& ref) {
    return {key, [&ref, key](const std::string& v, int line) { ref = to_count(key, v, line); },
            [&ref] { return std::to_string(ref); }};
}

template <typename E>
Field choice(const std::string& key, E& ref, std::vector<std::pair<std::string, E>> names) {
    return {key,
            [&ref, key, names](const std::string& v, int line) {
                for (const auto& [n, e] : names)
                    if (n == v) {
                        ref = e;
                        return;
                    }
                std::string allowed;
                for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + n;
                throw ConfigError(key, line, "expected one of " + allowed + ", got '" + v + "'");
            },
            [&ref, names] {
                for (const auto& [n, e] : names)
                    if (e == ref) return n;
                return std::string("?");
            }};
}

std::vector<Field> bind(RunConfig& c) {
    std::vector<Field> f;
    f.push_back(num("circuit.v_in", c.circuit.v_in));
    f.push_back(num("circuit.l_henry", c.circuit.l_henry));
    f.push_back(num("circuit.c_farad", c.circuit.c_farad));
    f.push_back({"circuit.r_ohm",
                 [&c](const std::string& v, int line) {
                     if (v == "none")
                         c.circuit.r_ohm.reset();
                     else
                         c.circuit.r_ohm = to_double("circuit.r_ohm", v, line);
                 },
                 [&c] { return c.circuit.r_ohm ? fmt(*c.circuit.r_ohm) : std::string("none"); }});
    f.push_back(num("circuit.p_cpl", c.circuit.p_cpl));
    f.push_back(num("circuit.f_sw", c.circuit.f_sw));
    f.push_back(num("circuit.v_ref", c.circuit.v_ref));
    f.push_back(num("circuit.v_min", c.circuit.v_min));

    EpisodeConfig& e = c.episode;
    f.push_back(num("episode.duration", e.duration));
    f.push_back(num("episode.control_period", e.control_period));
    f.push_back(num("episode.sim_dt", e.sim_dt));
    f.push_back(num("episode.f_tri", e.f_tri));
    f.push_back(num("episode.abort_band", e.abort_band));
    f.push_back(num("episode.initial_amplitude", e.initial_amplitude));
    f.push_back(choice("episode.derivative", e.derivative_mode,
                       {{"substep", DerivativeMode::SubStep}, {"period", DerivativeMode::ControlPeriod}}));
    f.push_back(choice("episode.init", e.init_mode,
                       {{"uniform", InitMode::Uniform},
                        {"uniform_matched", InitMode::UniformMatched},
                        {"operating_point", InitMode::OperatingPoint}}));
    f.push_back(num("episode.init_v_lo", e.init_v_lo));
    f.push_back(num("episode.init_v_hi", e.init_v_hi));
    f.push_back(num("episode.init_i_l", e.init_i_l));
    f.push_back({"episode.cpl_choices",
                 [&e](const std::string& v, int line) {
                     e.cpl_choices.clear();
                     for (const auto& item : split(v, ','))
                         e.cpl_choices.push_back(to_double("episode.cpl_choices", item, line));
                     if (e.cpl_choices.empty()) throw ConfigError("episode.cpl_choices", line, "empty list");
                 },
                 [&e] {
                     std::string s;
                     for (double p : e.cpl_choices) s += (s.empty() ? "" : ", ") + fmt(p);
                     return s;
                 }});
    f.push_back(num("episode.cpl_step_probability", e.cpl_step_probability));
    f.push_back(num("episode.cpl_step_t_lo", e.cpl_step_t_lo));
    f.push_back(num("episode.cpl_step_t_hi", e.cpl_step_t_hi));
    f.push_back(num("carrier.amp_max", e.limits.amp_max));
    f.push_back(num("carrier.d_min", e.limits.d_min));
    f.push_back(num("carrier.d_max", e.limits.d_max));

    f.push_back(choice("actions.preset", c.actions.preset,
                       {{"two_speed", ActionPreset::TwoSpeed}, {"grid", ActionPreset::Grid}}));
    f.push_back(num("actions.fine", c.actions.fine));
    f.push_back(num("actions.coarse", c.actions.coarse));
    f.push_back(num("actions.damplitude", c.actions.damplitude));

    f.push_back(num("reward.alpha", c.reward.alpha));
    f.push_back(num("reward.beta", c.reward.beta));
    f.push_back(num("reward.omega", c.reward.omega));
    f.push_back(num("reward.r_cap", c.reward.r_cap));
    f.push_back(num("reward.eps_floor", c.reward.eps_floor));

    f.push_back(count("network.m", c.agent.topology.m));
    f.push_back(count("network.n", c.agent.topology.n));
    f.push_back(count("network.p", c.agent.topology.p));
    f.push_back(count("network.merge", c.agent.topology.merge));

    Hyperparams& h = c.agent;
    f.push_back(num("agent.lr", h.lr));
    f.push_back(num("agent.gamma", h.gamma));
    f.push_back(count("agent.batch_size", h.batch_size));
    f.push_back(num("agent.epsilon", h.epsilon));
    f.push_back(count("agent.target_sync_period", h.target_sync_period));
    f.push_back(count("agent.warmup_steps", h.warmup_steps));
    f.push_back(count("agent.train_steps_per_env_step", h.train_steps_per_env_step));
    f.push_back(count("agent.replay_capacity", h.replay_capacity));
    f.push_back(choice("agent.absorbing_aborts", h.absorbing_aborts, {{"true", true}, {"false", false}}));
    f.push_back(choice("agent.optimizer", h.optimizer, {{"sgd", OptimizerKind::Sgd}, {"adam", OptimizerKind::Adam}}));

    f.push_back({"train.episodes",
                 [&c](const std::string& v, int line) {
                     c.episodes = to_count("train.episodes", v, line);
                     c.has_episodes = true;
                 },
                 [&c] { return std::to_string(c.episodes); }});

    f.push_back(count("selection.every", c.selection.every));
    f.push_back(count("selection.episodes", c.selection.episodes));

    f.push_back(num("pi.kvp", c.pi.kvp));
    f.push_back(num("pi.kvi", c.pi.kvi));
    f.push_back(num("pi.kcp", c.pi.kcp));
    f.push_back(num("pi.kci", c.pi.kci));

    f.push_back(num("metrics.settling_band", c.metrics.settling_band));
    f.push_back(num("metrics.ss_window", c.metrics.ss_window));

    f.push_back({"sweep.topologies",
                 [&c](const std::string& v, int line) {
                     c.sweep.topologies.clear();
                     for (const auto& item : split(v, ',')) {
                         const auto parts = split(item, 'x');
                         if (parts.size() != 3)
                             throw ConfigError("sweep.topologies", line, "expected MxNxP, got '" + item + "'");
                         Topology t;
                         t.m = to_count("sweep.topologies", parts[0], line);
                         t.n = to_count("sweep.topologies", parts[1], line);
                         t.p = to_count("sweep.topologies", parts[2], line);
                         t.merge = c.agent.topology.merge;
                         c.sweep.topologies.push_back(t);
                     }
                 },
                 [&c] {
                     std::string s;
                     for (const Topology& t : c.sweep.topologies)
                         s += (s.empty() ? "" : ", ") + std::to_string(t.m) + "x" + std::to_string(t.n) + "x" +
                              std::to_string(t.p);
                     return s;
                 }});
    f.push_back({"sweep.rewards",
                 [&c](const std::string& v, int line) {
                     c.sweep.rewards.clear();
                     for (const auto& item : split(v, ',')) {
                         const auto parts = split(item, ':');
                         if (parts.size() != 2)
                             throw ConfigError("sweep.rewards", line, "expected alpha:beta, got '" + item + "'");
                         c.sweep.rewards.emplace_back(to_double("sweep.rewards", parts[0], line),
                                                      to_double("sweep.rewards", parts[1], line));
                     }
                 },
                 [&c] {
                     std::string s;
                     for (const auto& [a, b] : c.sweep.rewards) s += (s.empty() ? "" : ", ") + fmt(a) + ":" + fmt(b);
                     return s;
                 }});
    f.push_back(count("sweep.seeds", c.sweep.seeds));
    return f;
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line, lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError(key, lineno, "key outside of any [section]");
        const std::string full = section + "." + key;
        if (doc.entries.count(full)) throw ConfigError(full, lineno, "duplicate key");
        doc.entries[full] = {trim(line.substr(eq + 1)), lineno};
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

ActionSpace ActionConfig::build() const {
    return preset == ActionPreset::Grid ? ActionSpace::grid(fine, damplitude)
                                        : ActionSpace::two_speed(fine, coarse, damplitude);
}

double ActionConfig::unit() const { return preset == ActionPreset::Grid ? fine : coarse; }

EpisodeConfig RunConfig::default_episode() {
    EpisodeConfig e;
    e.init_mode = InitMode::OperatingPoint;
    e.cpl_step_probability = 1.0;
    return e;
}

Hyperparams RunConfig::default_agent() {
    Hyperparams hp;
    hp.optimizer = OptimizerKind::Adam;
    return hp;
}

RewardParams RunConfig::default_reward() {
    // Caps the in-band bonus at beta / eps_floor, the same order as the out-of-band penalty.
    RewardParams r;
    r.r_cap = 0.1;
    r.eps_floor = 0.01;
    return r;
}

RunConfig RunConfig::from_document(const ConfigDocument& doc) {
    RunConfig c;
    auto fields = bind(c);
    // Topologies in the sweep inherit the merge width, so apply network.* first.
    std::stable_partition(fields.begin(), fields.end(),
                          [](const Field& f) { return f.key.rfind("network.", 0) == 0; });
    for (const auto& [key, entry] : doc.entries) {
        const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
        if (!known) throw ConfigError(key, entry.line, "unknown key");
    }
    for (const Field& f : fields) {
        const auto it = doc.entries.find(f.key);
        if (it != doc.entries.end()) f.set(it->second.value, it->second.line);
    }
    try {
        c.circuit.validate();
        c.episode.validate();
        c.reward.validate();
        c.agent.validate();
        c.actions.build();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config", 0, e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_document(ConfigDocument::load(path)); }

void RunConfig::require_training_fields() const {
    if (!has_episodes) throw ConfigError("train.episodes", 0, "missing required field");
}

std::string RunConfig::echo() const {
    RunConfig copy = *this;
    std::string out, section;
    for (const Field& f : bind(copy)) {
        if (f.key == "train.episodes" && !has_episodes) continue;
        const auto dot = f.key.find('.');
        const std::string sec = f.key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += f.key.substr(dot + 1) + " = " + f.get() + "\n";
    }
    return out;
}

}  // namespace buckrl
