#pragma once

#include "buckrl/trace.hpp"

#include <optional>
#include <span>
#include <vector>

namespace buckrl {

/// Response measured between one edge (or the start) and the next edge (or the end).
struct SegmentMetrics {
    double start = 0.0;
    double end = 0.0;
    double overshoot = 0.0;           // max |e| in the segment
    std::optional<double> settling;   // empty: never settled inside the segment
    double steady_state_error = 0.0;  // mean |e| over the final window
};

struct MetricsReport {
    std::vector<SegmentMetrics> segments;
    double max_overshoot = 0.0;            // over the disturbance segments
    std::optional<double> settling_time;   // worst disturbance segment; empty if any did not settle
    double steady_state_error = 0.0;       // worst segment
    double max_deviation_fraction = 0.0;   // max |e| / v_ref over the whole trace

    bool operator==(const MetricsReport&) const = default;
};

struct MetricsOptions {
    double settling_band = 1.0;
    double ss_window = 0.01;
};

/// Edges split the trace into segments; with no edges the whole trace is one
/// segment measured from the initial condition.
MetricsReport compute_metrics(std::span<const TraceRow> trace, double v_ref, std::span<const double> edges,
                              const MetricsOptions& options = {});

bool operator==(const SegmentMetrics& a, const SegmentMetrics& b);

}  // namespace buckrl
