#include "buckrl/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace buckrl {

bool operator==(const SegmentMetrics& a, const SegmentMetrics& b) {
    return a.start == b.start && a.end == b.end && a.overshoot == b.overshoot && a.settling == b.settling &&
           a.steady_state_error == b.steady_state_error;
}

namespace {

SegmentMetrics measure(std::span<const TraceRow> rows, double start, double end, double v_ref,
                       const MetricsOptions& opt) {
    SegmentMetrics m;
    m.start = start;
    m.end = end;
    if (rows.empty()) {
        m.settling = 0.0;
        return m;
    }
    std::size_t last_out = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double err = std::abs(rows[i].v_o - v_ref);
        m.overshoot = std::max(m.overshoot, err);
        if (err > opt.settling_band) last_out = i;
    }
    if (last_out == rows.size()) {
        m.settling = 0.0;
    } else if (last_out + 1 < rows.size()) {
        // Interpolate the band crossing between the last outside sample and the next one.
        const TraceRow& a = rows[last_out];
        const TraceRow& b = rows[last_out + 1];
        const double ea = std::abs(a.v_o - v_ref), eb = std::abs(b.v_o - v_ref);
        const double frac = ea > eb ? (ea - opt.settling_band) / (ea - eb) : 1.0;
        m.settling = a.t + std::clamp(frac, 0.0, 1.0) * (b.t - a.t) - start;
    }

    const double window_start = end - opt.ss_window;
    double acc = 0.0;
    std::size_t n = 0;
    for (const TraceRow& r : rows) {
        if (r.t >= window_start) {
            acc += std::abs(r.v_o - v_ref);
            ++n;
        }
    }
    m.steady_state_error = n > 0 ? acc / static_cast<double>(n) : std::abs(rows.back().v_o - v_ref);
    return m;
}

}  // namespace

MetricsReport compute_metrics(std::span<const TraceRow> trace, double v_ref, std::span<const double> edges,
                              const MetricsOptions& options) {
    if (trace.empty()) throw EmptyTrace();
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].t < trace[i - 1].t) throw std::invalid_argument("compute_metrics: trace not time-sorted");

    std::vector<double> bounds{trace.front().t};
    for (double e : edges)
        if (e > bounds.back()) bounds.push_back(e);
    const double t_end = trace.back().t;

    MetricsReport rep;
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        const double start = bounds[k];
        const bool last = k + 1 == bounds.size();
        const double end = last ? t_end : bounds[k + 1];
        auto first = std::lower_bound(trace.begin(), trace.end(), start,
                                      [](const TraceRow& r, double t) { return r.t < t; });
        auto stop = last ? trace.end()
                         : std::lower_bound(trace.begin(), trace.end(), end,
                                            [](const TraceRow& r, double t) { return r.t < t; });
        rep.segments.push_back(measure({first, stop}, start, end, v_ref, options));
    }

    // With edges present the initial segment is the pre-disturbance steady state.
    const std::size_t first_disturbed = rep.segments.size() > 1 ? 1 : 0;
    bool all_settled = true;
    double worst_settling = 0.0;
    for (std::size_t k = 0; k < rep.segments.size(); ++k) {
        const SegmentMetrics& s = rep.segments[k];
        rep.steady_state_error = std::max(rep.steady_state_error, s.steady_state_error);
        if (k < first_disturbed) continue;
        rep.max_overshoot = std::max(rep.max_overshoot, s.overshoot);
        if (s.settling)
            worst_settling = std::max(worst_settling, *s.settling);
        else
            all_settled = false;
    }
    if (all_settled) rep.settling_time = worst_settling;
    for (const TraceRow& r : trace)
        rep.max_deviation_fraction = std::max(rep.max_deviation_fraction, std::abs(r.v_o - v_ref) / v_ref);
    return rep;
}

}  // namespace buckrl
