#pragma once

#include "buckrl/agent.hpp"
#include "buckrl/config.hpp"
#include "buckrl/metrics.hpp"
#include "buckrl/qnet.hpp"
#include "buckrl/trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace buckrl {

/// A load profile to run a controller through. The first schedule entry sits
/// at t = 0 and sets the initial load; later entries are the disturbance edges.
struct Scenario {
    std::string name;
    CplSchedule schedule;
    double duration = 0.2;

    std::vector<double> edges() const;
    void validate() const;
};

/// 300 W, 500 W at 80 ms, back to 300 W at 140 ms.
Scenario scenario_a();
/// 300 W, 900 W at 80 ms, back to 300 W at 140 ms.
Scenario scenario_b();
/// "A", "B", or a path to a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);
Scenario load_scenario(const std::string& path);

struct EvalResult {
    std::vector<TraceRow> trace;
    MetricsReport metrics;
    bool aborted = false;
};

/// Greedy policy (epsilon = 0) from the scenario's operating point.
EvalResult run_eval(const QNetwork& net, const RunConfig& config, const Scenario& scenario);
/// Double-loop PI from the same operating point.
EvalResult run_baseline(const RunConfig& config, const Scenario& scenario);

/// Negated mean |e| of greedy rollouts on fixed episodes drawn from the
/// training distribution (never the evaluation scenarios). Higher is better.
double validation_score(const QNetwork& net, const RunConfig& config, std::uint64_t seed);

/// Trains with the given seed, keeping the best validated snapshot; when out_dir is non-empty writes checkpoint.qnet,
/// curve.csv and manifest.txt there.
TrainResult run_train(const RunConfig& config, std::uint64_t seed, const std::string& out_dir);

struct SweepRow {
    std::size_t cell_id = 0;
    std::uint64_t seed = 0;
    Topology topology;
    double alpha = 0.0;
    double beta = 0.0;
    double final_ss_error_v = 0.0;
    double overshoot_v = 0.0;
    std::optional<double> settling_ms;
    bool aborted = false;
    bool failed = false;
    std::string error;
};

/// Seed of the k-th replicate; shared by every cell so cells are compared on equal draws.
std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t replicate);

/// Trains and evaluates (on scenario A) every topology x reward cell for each
/// replicate seed. Cells run concurrently; a failing cell is reported, not fatal.
std::vector<SweepRow> run_sweep(const RunConfig& config, std::uint64_t master_seed, const std::string& out_dir);
void write_summary_csv(std::ostream& out, const std::vector<SweepRow>& rows);

std::string version_string();
std::string manifest_text(const RunConfig& config, std::uint64_t seed, const std::string& command);

}  // namespace buckrl
