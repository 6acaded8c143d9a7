#include "buckrl/harness.hpp"

#include "buckrl/pi.hpp"
#include "buckrl/seeding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef BUCKRL_VERSION
#define BUCKRL_VERSION "unknown"
#endif

namespace buckrl {

namespace fs = std::filesystem;

std::vector<double> Scenario::edges() const {
    std::vector<double> out;
    for (const auto& [t, p] : schedule.steps)
        if (t > 0.0) out.push_back(t);
    return out;
}

void Scenario::validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("scenario duration must be positive");
    if (schedule.empty() || schedule.steps.front().first != 0.0)
        throw std::invalid_argument("scenario schedule must start at t = 0");
    schedule.validate(duration);
}

Scenario scenario_a() { return {"A", {{{0.0, 300.0}, {0.08, 500.0}, {0.14, 300.0}}}, 0.2}; }

Scenario scenario_b() { return {"B", {{{0.0, 300.0}, {0.08, 900.0}, {0.14, 300.0}}}, 0.2}; }

Scenario load_scenario(const std::string& path) {
    const ConfigDocument doc = ConfigDocument::load(path);
    Scenario sc;
    sc.name = fs::path(path).stem().string();
    for (const auto& [key, entry] : doc.entries) {
        if (key == "scenario.name") {
            sc.name = entry.value;
        } else if (key == "scenario.duration") {
            const auto r = std::from_chars(entry.value.data(), entry.value.data() + entry.value.size(), sc.duration);
            if (r.ec != std::errc{}) throw ConfigError(key, entry.line, "expected a number");
        } else if (key == "scenario.schedule") {
            std::stringstream ss(entry.value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                double t = 0, p = 0;
                char colon = 0;
                std::istringstream is(item);
                if (!(is >> t >> colon >> p) || colon != ':')
                    throw ConfigError(key, entry.line, "expected time:watts entries, got '" + item + "'");
                sc.schedule.steps.emplace_back(t, p);
            }
        } else {
            throw ConfigError(key, entry.line, "unknown key");
        }
    }
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario.schedule", 0, e.what());
    }
    return sc;
}

Scenario resolve_scenario(const std::string& name_or_path) {
    if (name_or_path == "A" || name_or_path == "a") return scenario_a();
    if (name_or_path == "B" || name_or_path == "b") return scenario_b();
    return load_scenario(name_or_path);
}

EvalResult run_eval(const QNetwork& net, const RunConfig& config, const Scenario& scenario) {
    scenario.validate();
    EpisodeConfig ep = config.episode;
    ep.duration = scenario.duration;
    ep.cpl_schedule = scenario.schedule;
    ep.init_mode = InitMode::OperatingPoint;
    ep.trace_stride = std::max(1, static_cast<int>(std::lround(1e-5 / ep.sim_dt)));
    BuckEnv env(config.circuit, ep, config.actions.build(), config.reward);

    const FeatureMap features = config.features();
    const auto actions = features.encode(env.action_space());
    Observation obs = env.reset(0);
    EvalResult res;
    bool done = false;
    while (!done) {
        const StepResult step = env.step(greedy_action(net, features.encode(obs), actions));
        obs = step.obs;
        done = step.done;
        res.aborted = step.aborted;
    }
    res.trace = env.trace();
    res.metrics = compute_metrics(res.trace, config.circuit.v_ref, scenario.edges(), config.metrics);
    return res;
}

EvalResult run_baseline(const RunConfig& config, const Scenario& scenario) {
    scenario.validate();
    PiRunOptions opt;
    opt.trace_stride = std::max(1, static_cast<int>(std::lround(1e-5 / config.episode.sim_dt)));
    EvalResult res;
    res.trace = run_pi_closed_loop(config.circuit, config.pi, scenario.schedule, scenario.duration,
                                   config.episode.sim_dt, opt);
    res.metrics = compute_metrics(res.trace, config.circuit.v_ref, scenario.edges(), config.metrics);
    return res;
}

std::string version_string() { return std::string("buckrl ") + BUCKRL_VERSION; }

std::string manifest_text(const RunConfig& config, std::uint64_t seed, const std::string& command) {
    std::string out;
    out += "# version: " + version_string() + "\n";
    out += "# command: " + command + "\n";
    out += "# seed: " + std::to_string(seed) + "\n";
    out += config.echo();
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

double validation_score(const QNetwork& net, const RunConfig& config, std::uint64_t seed) {
    if (config.selection.episodes == 0) return 0.0;
    BuckEnv env(config.circuit, config.episode, config.actions.build(), config.reward);
    const FeatureMap features = config.features();
    const auto actions = features.encode(env.action_space());
    const auto horizon = std::max<long long>(1, std::llround(config.episode.duration / config.episode.control_period));
    double total = 0.0;
    for (std::size_t j = 0; j < config.selection.episodes; ++j) {
        Observation obs = env.reset(derive_seed(seed, streams::kValidation, j));
        double sum = 0.0;
        long long steps = 0;
        for (;;) {
            const StepResult r = env.step(greedy_action(net, features.encode(obs), actions));
            sum += std::abs(r.obs.e);
            ++steps;
            if (r.done) {
                // An abort counts as sitting at the abort band for the rest of the episode.
                if (r.aborted) sum += config.episode.abort_band * static_cast<double>(std::max(0LL, horizon - steps));
                break;
            }
            obs = r.obs;
        }
        total += sum / static_cast<double>(std::max(horizon, steps));
    }
    return -total / static_cast<double>(config.selection.episodes);
}

TrainResult run_train(const RunConfig& config, std::uint64_t seed, const std::string& out_dir) {
    BuckEnv env(config.circuit, config.episode, config.actions.build(), config.reward);
    auto persist = [&](const TrainResult& r) {
        if (out_dir.empty()) return;
        fs::create_directories(out_dir);
        save_checkpoint(r.net, (fs::path(out_dir) / "checkpoint.qnet").string());
        std::ostringstream curve;
        write_curve_csv(curve, r.curve);
        write_file(fs::path(out_dir) / "curve.csv", curve.str());
        std::string manifest = manifest_text(config, seed, "train");
        if (r.selected_after)
            manifest.insert(manifest.find("\n[") + 1, "# selected_after_episodes: " + std::to_string(*r.selected_after) + "\n");
        write_file(fs::path(out_dir) / "manifest.txt", manifest);
    };
    SnapshotSelection selection;
    selection.every = config.selection.every;
    selection.score = [&](const QNetwork& net) { return validation_score(net, config, seed); };
    try {
        TrainResult r = train(env, config.agent, config.features(), seed, config.episodes, selection);
        persist(r);
        return r;
    } catch (const AbortedTooOften& e) {
        TrainResult partial;
        partial.net = e.network();
        partial.curve = e.curve();
        persist(partial);
        throw;
    }
}

std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t replicate) {
    return derive_seed(master_seed, streams::kSweepCell, replicate);
}

std::vector<SweepRow> run_sweep(const RunConfig& config, std::uint64_t master_seed, const std::string& out_dir) {
    std::vector<Topology> topologies = config.sweep.topologies;
    if (topologies.empty()) topologies.push_back(config.agent.topology);
    std::vector<std::pair<double, double>> rewards = config.sweep.rewards;
    if (rewards.empty()) rewards.emplace_back(config.reward.alpha, config.reward.beta);
    const std::size_t seeds = std::max<std::size_t>(1, config.sweep.seeds);

    std::vector<SweepRow> rows;
    std::size_t cell = 0;
    for (const Topology& topo : topologies) {
        for (const auto& [alpha, beta] : rewards) {
            for (std::size_t k = 0; k < seeds; ++k) {
                SweepRow row;
                row.cell_id = cell;
                row.seed = sweep_seed(master_seed, k);
                row.topology = topo;
                row.alpha = alpha;
                row.beta = beta;
                rows.push_back(row);
            }
            ++cell;
        }
    }

    const Scenario sc = scenario_a();
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < rows.size(); ++i) {
        SweepRow& row = rows[i];
        RunConfig cfg = config;
        cfg.agent.topology = row.topology;
        cfg.reward.alpha = row.alpha;
        cfg.reward.beta = row.beta;
        std::string dir;
        if (!out_dir.empty())
            dir = (fs::path(out_dir) / ("cell" + std::to_string(row.cell_id) + "_seed" + std::to_string(row.seed)))
                      .string();
        try {
            TrainResult tr = run_train(cfg, row.seed, dir);
            EvalResult ev = run_eval(tr.net, cfg, sc);
            row.final_ss_error_v = ev.metrics.segments.back().steady_state_error;
            row.overshoot_v = ev.metrics.max_overshoot;
            if (ev.metrics.settling_time) row.settling_ms = *ev.metrics.settling_time * 1e3;
            row.aborted = ev.aborted;
            if (!dir.empty()) write_trace_csv((fs::path(dir) / "eval_A.csv").string(), ev.trace);
        } catch (const std::exception& e) {
            row.failed = true;
            row.aborted = true;
            row.error = e.what();
        }
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream ss;
        write_summary_csv(ss, rows);
        write_file(fs::path(out_dir) / "summary.csv", ss.str());
        write_file(fs::path(out_dir) / "manifest.txt", manifest_text(config, master_seed, "sweep"));
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "cell_id,seed,M,N,P,alpha,beta,final_ss_error_v,overshoot_v,settling_ms,aborted\n";
    out << std::setprecision(10);
    for (const SweepRow& r : rows) {
        out << r.cell_id << ',' << r.seed << ',' << r.topology.m << ',' << r.topology.n << ',' << r.topology.p << ','
            << r.alpha << ',' << r.beta << ',';
        if (r.failed) {
            out << ",,,failed\n";
            continue;
        }
        out << r.final_ss_error_v << ',' << r.overshoot_v << ',';
        if (r.settling_ms)
            out << *r.settling_ms;
        else
            out << "not-settled";
        out << ',' << (r.aborted ? 1 : 0) << '\n';
    }
}

}  // namespace buckrl
