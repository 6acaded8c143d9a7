#pragma once

// Batch kernels used by the trainer. Each parallel kernel has a serial
// reference with the same summation order, so both produce bit-identical
// results for any thread count.

#include "buckrl/qnet.hpp"

#include <span>
#include <vector>

namespace buckrl {

Gradient batch_gradient_serial(const QNetwork& net, std::span<const Sample> batch);
Gradient batch_gradient_parallel(const QNetwork& net, std::span<const Sample> batch);

/// max over actions of Q(s, a) for each state.
void batch_max_q_serial(const QNetwork& net, std::span<const StateInput> states,
                        std::span<const ActionInput> actions, std::span<double> out);
void batch_max_q_parallel(const QNetwork& net, std::span<const StateInput> states,
                          std::span<const ActionInput> actions, std::span<double> out);

/// Mean squared residual; per-sample residuals are summed in index order.
double batch_loss_serial(const QNetwork& net, std::span<const Sample> batch);
double batch_loss_parallel(const QNetwork& net, std::span<const Sample> batch);

}  // namespace buckrl
