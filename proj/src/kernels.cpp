#include "buckrl/kernels.hpp"

#include <algorithm>

namespace buckrl {

Gradient batch_gradient_serial(const QNetwork& net, std::span<const Sample> batch) {
    return gradient(net, batch);
}

Gradient batch_gradient_parallel(const QNetwork& net, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
    const std::size_t b = batch.size();
    const std::size_t np = net.topology.parameter_count();
    const double inv_b = 1.0 / static_cast<double>(b);

    // One row of per-sample contributions per batch entry.
    std::vector<double> rows(b * np);
#pragma omp parallel
    {
        Gradient local(net.topology);
        ForwardCache cache;
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < b; ++i) {
            for (Layer* layer : local.layers()) {
                std::fill(layer->weights.begin(), layer->weights.end(), 0.0);
                std::fill(layer->biases.begin(), layer->biases.end(), 0.0);
            }
            const Sample& smp = batch[i];
            const double q = forward(net, smp.s, smp.a, cache);
            accumulate_q_gradient(net, smp.s, smp.a, cache, -2.0 * (smp.target - q) * inv_b, local);
            double* row = rows.data() + i * np;
            for (const Layer* layer : local.layers()) {
                row = std::copy(layer->weights.begin(), layer->weights.end(), row);
                row = std::copy(layer->biases.begin(), layer->biases.end(), row);
            }
        }
    }

    std::vector<double> flat(np, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < np; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < b; ++i) acc += rows[i * np + k];
        flat[k] = acc;
    }
    Gradient grad(net.topology);
    unflatten(flat, grad);
    return grad;
}

namespace {

double max_q(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions, std::vector<double>& q,
             std::vector<double>& scratch) {
    q.resize(actions.size());
    q_values(net, s, actions, q, scratch);
    return *std::max_element(q.begin(), q.end());
}

}  // namespace

void batch_max_q_serial(const QNetwork& net, std::span<const StateInput> states,
                        std::span<const ActionInput> actions, std::span<double> out) {
    if (out.size() != states.size()) throw DimensionMismatch("batch_max_q: output size mismatch");
    std::vector<double> q, scratch;
    for (std::size_t i = 0; i < states.size(); ++i) out[i] = max_q(net, states[i], actions, q, scratch);
}

void batch_max_q_parallel(const QNetwork& net, std::span<const StateInput> states,
                          std::span<const ActionInput> actions, std::span<double> out) {
    if (out.size() != states.size()) throw DimensionMismatch("batch_max_q: output size mismatch");
#pragma omp parallel
    {
        std::vector<double> q, scratch;
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < states.size(); ++i) out[i] = max_q(net, states[i], actions, q, scratch);
    }
}

double batch_loss_serial(const QNetwork& net, std::span<const Sample> batch) { return mse_loss(net, batch); }

double batch_loss_parallel(const QNetwork& net, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("mse_loss: empty batch");
    std::vector<double> sq(batch.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double r = batch[i].target - forward(net, batch[i].s, batch[i].a);
        sq[i] = r * r;
    }
    double acc = 0.0;
    for (double v : sq) acc += v;
    return acc / static_cast<double>(batch.size());
}

}  // namespace buckrl
