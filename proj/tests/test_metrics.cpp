#include "buckrl/metrics.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>

using namespace buckrl;
using Catch::Approx;

namespace {

std::vector<TraceRow> sample(const std::function<double(double)>& v, double t_end, double dt) {
    std::vector<TraceRow> rows;
    const auto n = static_cast<long>(std::llround(t_end / dt));
    for (long k = 0; k <= n; ++k) {
        TraceRow r;
        r.t = static_cast<double>(k) * dt;
        r.v_o = v(r.t);
        r.e = r.v_o - 100.0;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("constant trace at the reference") {
    const auto rows = sample([](double) { return 100.0; }, 0.1, 1e-4);
    const std::vector<double> edges{0.05};
    const MetricsReport m = compute_metrics(rows, 100.0, edges);
    REQUIRE(m.segments.size() == 2);
    CHECK(m.max_overshoot == 0.0);
    REQUIRE(m.settling_time);
    CHECK(*m.settling_time == 0.0);
    CHECK(m.steady_state_error == 0.0);
    CHECK(m.max_deviation_fraction == 0.0);
}

TEST_CASE("synthetic dip with exponential recovery") {
    const double edge = 0.05, settle = 7e-3;
    const double tau = settle / std::log(4.5);  // 4.5 * exp(-7 ms / tau) = 1
    auto v = [&](double t) { return t < edge ? 100.0 : 100.0 - 4.5 * std::exp(-(t - edge) / tau); };
    const auto rows = sample(v, 0.1, 1e-5);
    const std::vector<double> edges{edge};
    const MetricsReport m = compute_metrics(rows, 100.0, edges);
    CHECK(m.max_overshoot == Approx(4.5).margin(1e-9));
    REQUIRE(m.settling_time);
    CHECK(*m.settling_time == Approx(settle).margin(1e-7));
    CHECK(m.max_deviation_fraction == Approx(0.045).margin(1e-11));

    // Mean |e| over the last 10 ms of the recovery, integrated independently.
    const double t0 = 0.09 - edge, t1 = 0.1 - edge;
    const double mean = 4.5 * tau * (std::exp(-t0 / tau) - std::exp(-t1 / tau)) / 0.01;
    CHECK(m.steady_state_error == Approx(mean).epsilon(1e-3));
}

TEST_CASE("settling counts from the last entry into the band") {
    // Enters at 2 ms, leaves at 4 ms, enters for good at 6 ms.
    auto v = [](double t) {
        if (t < 0.002) return 95.0;
        if (t < 0.004) return 100.5;
        if (t < 0.006) return 102.0;
        return 100.2;
    };
    const auto rows = sample(v, 0.02, 1e-4);
    const MetricsReport m = compute_metrics(rows, 100.0, std::vector<double>{});
    REQUIRE(m.segments.size() == 1);
    REQUIRE(m.settling_time);
    // The step between samples is interpolated onto the band edge.
    CHECK(*m.settling_time == Approx(0.006).margin(1e-4));
    CHECK(*m.settling_time > 0.0059);
    CHECK(m.max_overshoot == 5.0);
}

TEST_CASE("a trace that never settles reports not settled") {
    const auto rows = sample([](double t) { return t < 0.01 ? 100.0 : 97.0; }, 0.03, 1e-4);
    const MetricsReport m = compute_metrics(rows, 100.0, std::vector<double>{0.01});
    CHECK(!m.settling_time);
    CHECK(!m.segments[1].settling);
    CHECK(m.segments[0].settling);
    CHECK(m.steady_state_error == Approx(3.0));
}

TEST_CASE("degenerate schedule measures from the initial condition") {
    auto v = [](double t) { return 100.0 - 3.0 * std::exp(-t / 2e-3); };
    const auto rows = sample(v, 0.05, 1e-5);
    const MetricsReport m = compute_metrics(rows, 100.0, std::vector<double>{});
    REQUIRE(m.segments.size() == 1);
    CHECK(m.segments[0].start == 0.0);
    CHECK(m.max_overshoot == 3.0);
    REQUIRE(m.settling_time);
    CHECK(*m.settling_time == Approx(2e-3 * std::log(3.0)).margin(1e-7));
}

TEST_CASE("segments split at each edge") {
    auto v = [](double t) { return t < 0.08 ? 100.0 : (t < 0.14 ? 96.0 + 4.0 * (t - 0.08) / 0.06 : 101.5); };
    const auto rows = sample(v, 0.2, 1e-4);
    const std::vector<double> edges{0.08, 0.14};
    const MetricsReport m = compute_metrics(rows, 100.0, edges);
    REQUIRE(m.segments.size() == 3);
    CHECK(m.segments[1].start == 0.08);
    CHECK(m.segments[1].end == 0.14);
    CHECK(m.segments[1].overshoot == Approx(4.0));
    CHECK(m.segments[2].overshoot == Approx(1.5));
    CHECK(!m.segments[2].settling);
    CHECK(m.max_overshoot == Approx(4.0));
    CHECK(m.steady_state_error == Approx(1.5));
}

TEST_CASE("metrics input errors") {
    CHECK_THROWS_AS(compute_metrics(std::vector<TraceRow>{}, 100.0, std::vector<double>{}), EmptyTrace);
    std::vector<TraceRow> rows(2);
    rows[0].t = 1.0;
    CHECK_THROWS_AS(compute_metrics(rows, 100.0, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("metrics are deterministic") {
    auto v = [](double t) { return 100.0 + std::sin(300 * t) * std::exp(-50 * t); };
    const auto rows = sample(v, 0.1, 1e-5);
    const std::vector<double> edges{0.03, 0.07};
    CHECK(compute_metrics(rows, 100.0, edges) == compute_metrics(rows, 100.0, edges));
}
