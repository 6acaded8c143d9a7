#include "buckrl/kernels.hpp"

#include <catch_amalgamated.hpp>

#include <cstring>
#include <omp.h>
#include <random>

using namespace buckrl;

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<Sample> random_batch(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Sample> out(n);
    for (Sample& s : out) {
        for (double& x : s.s) x = g(rng);
        s.a = {g(rng), g(rng)};
        s.target = g(rng);
    }
    return out;
}

}  // namespace

TEST_CASE("parallel kernels are bitwise equal to the serial references") {
    const QNetwork net = init_network(3, {});
    const std::vector<ActionInput> actions{{-1, -1}, {-1, 0}, {0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, -1}};
    const int saved = omp_get_max_threads();
    for (std::size_t n : {1u, 7u, 256u, 1001u}) {
        const auto batch = random_batch(n, n);
        std::vector<StateInput> states;
        for (const Sample& s : batch) states.push_back(s.s);

        const auto g_serial = flatten(batch_gradient_serial(net, batch));
        const double l_serial = batch_loss_serial(net, batch);
        std::vector<double> m_serial(n);
        batch_max_q_serial(net, states, actions, m_serial);

        for (int threads : {1, 2, 3, 8}) {
            omp_set_num_threads(threads);
            INFO("batch " << n << " threads " << threads);
            CHECK(bitwise_equal(flatten(batch_gradient_parallel(net, batch)), g_serial));
            const double l_par = batch_loss_parallel(net, batch);
            CHECK(std::memcmp(&l_par, &l_serial, sizeof(double)) == 0);
            std::vector<double> m_par(n);
            batch_max_q_parallel(net, states, actions, m_par);
            CHECK(bitwise_equal(m_par, m_serial));
        }
    }
    omp_set_num_threads(saved);
}

TEST_CASE("serial kernels agree with the per-sample definitions") {
    const QNetwork net = init_network(4, {});
    const auto batch = random_batch(33, 9);
    const auto g = flatten(batch_gradient_serial(net, batch));
    const auto ref = flatten(gradient(net, batch));
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == Catch::Approx(ref[k]).margin(1e-14));

    double loss = 0.0;
    for (const Sample& s : batch) {
        const double r = forward(net, s.s, s.a) - s.target;
        loss += r * r;
    }
    CHECK(batch_loss_serial(net, batch) == Catch::Approx(loss / batch.size()).epsilon(1e-14));

    const std::vector<ActionInput> actions{{0, 0}, {1, 0}, {-1, 0.5}};
    std::vector<StateInput> states{batch[0].s, batch[1].s};
    std::vector<double> m(2);
    batch_max_q_serial(net, states, actions, m);
    for (std::size_t i = 0; i < 2; ++i) {
        double best = -1e300;
        for (const auto& a : actions) best = std::max(best, forward(net, states[i], a));
        CHECK(m[i] == best);
    }

    std::vector<double> wrong(1);
    CHECK_THROWS_AS(batch_max_q_serial(net, states, actions, wrong), DimensionMismatch);
}
