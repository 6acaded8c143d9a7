#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace buckrl {

inline constexpr std::size_t kStateInputs = 6;
inline constexpr std::size_t kActionInputs = 2;

using StateInput = std::array<double, kStateInputs>;
using ActionInput = std::array<double, kActionInputs>;

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MalformedCheckpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hidden widths: state path M then N, action path P, merge layer K.
struct Topology {
    std::size_t m = 4;
    std::size_t n = 8;
    std::size_t p = 8;
    std::size_t merge = 8;

    bool operator==(const Topology&) const = default;
    std::size_t parameter_count() const;
};

/// Dense layer, weights stored row-major (out x in).
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> biases;

    Layer() = default;
    Layer(std::size_t in_width, std::size_t out_width)
        : in(in_width), out(out_width), weights(in_width * out_width, 0.0), biases(out_width, 0.0) {}

    double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }

    bool operator==(const Layer&) const = default;
};

/// Parameters of the two-path network. The same shape doubles as a gradient.
struct QNetwork {
    Topology topology;
    Layer state1;  // 6 -> M
    Layer state2;  // M -> N
    Layer action;  // 2 -> P
    Layer merge;   // N+P -> K
    Layer output;  // K -> 1, linear

    QNetwork() : QNetwork(Topology{}) {}
    explicit QNetwork(const Topology& topo);

    std::array<Layer*, 5> layers() { return {&state1, &state2, &action, &merge, &output}; }
    std::array<const Layer*, 5> layers() const { return {&state1, &state2, &action, &merge, &output}; }

    bool operator==(const QNetwork&) const = default;
};

using Gradient = QNetwork;

/// Intermediate activations kept for backpropagation.
struct ForwardCache {
    std::vector<double> h1, h2, ha, hm;
    double q = 0.0;
    // Backward-pass scratch, reused across calls.
    std::vector<double> d_hm, d_h2, d_ha, d_h1;
};

double forward(const QNetwork& net, const StateInput& s, const ActionInput& a);
double forward(const QNetwork& net, const StateInput& s, const ActionInput& a, ForwardCache& cache);

/// Q for one state and every action encoding; shares the state path.
void q_values(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions,
              std::span<double> out);
void q_values(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions,
              std::span<double> out, std::vector<double>& scratch);

/// Accumulates scale * dQ/dtheta into grad.
void accumulate_q_gradient(const QNetwork& net, const StateInput& s, const ActionInput& a,
                           ForwardCache& cache, double scale, Gradient& grad);

struct Sample {
    StateInput s;
    ActionInput a;
    double target = 0.0;
};

/// d/dtheta of mean over batch of (target - Q(s,a))^2.
Gradient gradient(const QNetwork& net, std::span<const Sample> batch);
double mse_loss(const QNetwork& net, std::span<const Sample> batch);

QNetwork sgd_update(const QNetwork& net, const Gradient& grad, double lr);
void sgd_update_in_place(QNetwork& net, const Gradient& grad, double lr);

/// Glorot-uniform weights, zero biases.
QNetwork init_network(std::uint64_t seed, const Topology& topology);

std::size_t parameter_count(const QNetwork& net);
std::vector<double> flatten(const QNetwork& net);
void unflatten(std::span<const double> values, QNetwork& net);

inline constexpr const char* kCheckpointMagic = "BUCKRL-QNET";
inline constexpr int kCheckpointVersion = 1;

std::string serialize(const QNetwork& net);
QNetwork deserialize(const std::string& text);
void save_checkpoint(const QNetwork& net, const std::string& path);
QNetwork load_checkpoint(const std::string& path);

}  // namespace buckrl
