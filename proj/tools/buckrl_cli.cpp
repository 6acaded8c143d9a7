// Command-line front end: train, eval, baseline, sweep, metrics, plot.

#include "buckrl/config.hpp"
#include "buckrl/harness.hpp"
#include "buckrl/plot.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace buckrl;

namespace {

std::string format_report(const MetricsReport& m) {
    std::ostringstream out;
    out << std::setprecision(6);
    for (std::size_t k = 0; k < m.segments.size(); ++k) {
        const SegmentMetrics& s = m.segments[k];
        out << "segment " << k << " start_s=" << s.start << " overshoot_v=" << s.overshoot << " settling_ms=";
        if (s.settling)
            out << *s.settling * 1e3;
        else
            out << "not-settled";
        out << " ss_error_v=" << s.steady_state_error << '\n';
    }
    out << "max_overshoot_v=" << m.max_overshoot << '\n';
    out << "settling_ms=";
    if (m.settling_time)
        out << *m.settling_time * 1e3;
    else
        out << "not-settled";
    out << '\n';
    out << "steady_state_error_v=" << m.steady_state_error << '\n';
    out << "max_deviation_percent=" << m.max_deviation_fraction * 100.0 << '\n';
    return out.str();
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

void emit_eval(const EvalResult& r, const std::string& out_dir, const std::string& stem) {
    const std::string report = format_report(r.metrics) + (r.aborted ? "aborted=1\n" : "aborted=0\n");
    std::cout << report;
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    write_trace_csv((fs::path(out_dir) / (stem + "_trace.csv")).string(), r.trace);
    std::ofstream((fs::path(out_dir) / (stem + "_metrics.txt")).string()) << report;
}

int fail(const std::string& kind, const std::string& message) {
    std::cerr << "error kind=" << kind << " message=\"" << message << "\"\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep-Q voltage control workbench for a buck converter with constant power loads"};
    app.require_subcommand(1);

    std::string config_path, out_dir, scenario = "A", checkpoint, trace_path;
    std::uint64_t seed = 1;
    double v_ref = 100.0, band = 1.0;
    bool no_current = false;

    auto* train = app.add_subcommand("train", "Train a DQN controller");
    train->add_option("--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Master seed");
    train->add_option("--out", out_dir, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Run a trained controller through a scenario");
    eval->add_option("--config", config_path, "Run configuration")->check(CLI::ExistingFile);
    eval->add_option("--checkpoint", checkpoint, "Network checkpoint")->required();
    eval->add_option("--scenario", scenario, "A, B, or a scenario file");
    eval->add_option("--out", out_dir, "Output directory");

    auto* baseline = app.add_subcommand("baseline", "Run the double-loop PI baseline through a scenario");
    baseline->add_option("--config", config_path, "Run configuration")->check(CLI::ExistingFile);
    baseline->add_option("--scenario", scenario, "A, B, or a scenario file");
    baseline->add_option("--out", out_dir, "Output directory");

    auto* sweep = app.add_subcommand("sweep", "Train and evaluate every cell of a parameter sweep");
    sweep->add_option("--config", config_path, "Run configuration with a [sweep] section")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--seed", seed, "Master seed");
    sweep->add_option("--out", out_dir, "Output directory")->required();

    auto* metrics = app.add_subcommand("metrics", "Compute overshoot/settling/steady-state metrics of a trace");
    metrics->add_option("trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
    metrics->add_option("--scenario", scenario, "Scenario whose edges split the trace");
    metrics->add_option("--v-ref", v_ref, "Reference voltage");
    metrics->add_option("--band", band, "Settling band in volts");

    auto* plot = app.add_subcommand("plot", "Render a trace as an SVG line plot");
    plot->add_option("trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", out_dir, "Output SVG file")->required();
    plot->add_flag("--no-current", no_current, "Plot only the output voltage");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("UsageError", e.what());
    }

    try {
        if (*train) {
            const RunConfig cfg = RunConfig::load(config_path);
            cfg.require_training_fields();
            const TrainResult r = run_train(cfg, seed, out_dir);
            if (!r.curve.empty()) {
                const CurvePoint& last = r.curve.back();
                std::cout << "episodes=" << r.curve.size() << " steps=" << last.steps
                          << " last_mean_abs_error_v=" << last.mean_abs_error << '\n';
            }
            std::cout << "checkpoint=" << (fs::path(out_dir) / "checkpoint.qnet").string() << '\n';
        } else if (*eval) {
            const RunConfig cfg = config_or_default(config_path);
            const QNetwork net = load_checkpoint(checkpoint);
            if (!(net.topology == cfg.agent.topology))
                throw MalformedCheckpoint("checkpoint topology does not match the configured network");
            emit_eval(run_eval(net, cfg, resolve_scenario(scenario)), out_dir, "eval");
        } else if (*baseline) {
            const RunConfig cfg = config_or_default(config_path);
            emit_eval(run_baseline(cfg, resolve_scenario(scenario)), out_dir, "baseline");
        } else if (*sweep) {
            const RunConfig cfg = RunConfig::load(config_path);
            cfg.require_training_fields();
            const auto rows = run_sweep(cfg, seed, out_dir);
            write_summary_csv(std::cout, rows);
        } else if (*metrics) {
            const auto rows = read_trace_csv(trace_path);
            const Scenario sc = resolve_scenario(scenario);
            MetricsOptions opt;
            opt.settling_band = band;
            std::cout << format_report(compute_metrics(rows, v_ref, sc.edges(), opt));
        } else if (*plot) {
            const auto rows = read_trace_csv(trace_path);
            PlotOptions opt;
            opt.include_current = !no_current;
            opt.title = fs::path(trace_path).filename().string();
            export_plot(rows, out_dir, opt);
            std::cout << "plot=" << out_dir << '\n';
        }
    } catch (const ConfigError& e) {
        return fail("ConfigError", e.what());
    } catch (const MalformedCheckpoint& e) {
        return fail("MalformedCheckpoint", e.what());
    } catch (const SingularVoltage& e) {
        return fail("SingularVoltage", e.what());
    } catch (const EmptyTrace& e) {
        return fail("EmptyTrace", e.what());
    } catch (const AbortedTooOften& e) {
        return fail("AbortedTooOften", e.what());
    } catch (const std::exception& e) {
        return fail("Error", e.what());
    }
    return 0;
}
