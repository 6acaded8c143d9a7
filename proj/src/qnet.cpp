#include "buckrl/qnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace buckrl {

std::size_t Topology::parameter_count() const {
    auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
    return dense(kStateInputs, m) + dense(m, n) + dense(kActionInputs, p) + dense(n + p, merge) + dense(merge, 1);
}

QNetwork::QNetwork(const Topology& topo)
    : topology(topo),
      state1(kStateInputs, topo.m),
      state2(topo.m, topo.n),
      action(kActionInputs, topo.p),
      merge(topo.n + topo.p, topo.merge),
      output(topo.merge, 1) {
    if (topo.m == 0 || topo.n == 0 || topo.p == 0 || topo.merge == 0)
        throw std::invalid_argument("layer widths must be positive");
}

namespace {

// y = relu(W x + b)
void dense_relu(const Layer& layer, const double* x, double* y) {
    for (std::size_t r = 0; r < layer.out; ++r) {
        double acc = layer.biases[r];
        const double* row = layer.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * x[c];
        y[r] = acc > 0.0 ? acc : 0.0;
    }
}

double merge_and_output(const QNetwork& net, const double* h2, const double* ha, double* hm) {
    const Layer& mg = net.merge;
    const std::size_t n = net.topology.n;
    for (std::size_t r = 0; r < mg.out; ++r) {
        double acc = mg.biases[r];
        const double* row = mg.weights.data() + r * mg.in;
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * h2[c];
        for (std::size_t c = 0; c < net.topology.p; ++c) acc += row[n + c] * ha[c];
        hm[r] = acc > 0.0 ? acc : 0.0;
    }
    double q = net.output.biases[0];
    for (std::size_t c = 0; c < mg.out; ++c) q += net.output.weights[c] * hm[c];
    return q;
}

}  // namespace

double forward(const QNetwork& net, const StateInput& s, const ActionInput& a, ForwardCache& cache) {
    const Topology& t = net.topology;
    cache.h1.resize(t.m);
    cache.h2.resize(t.n);
    cache.ha.resize(t.p);
    cache.hm.resize(t.merge);
    dense_relu(net.state1, s.data(), cache.h1.data());
    dense_relu(net.state2, cache.h1.data(), cache.h2.data());
    dense_relu(net.action, a.data(), cache.ha.data());
    cache.q = merge_and_output(net, cache.h2.data(), cache.ha.data(), cache.hm.data());
    return cache.q;
}

double forward(const QNetwork& net, const StateInput& s, const ActionInput& a) {
    ForwardCache cache;
    return forward(net, s, a, cache);
}

void q_values(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions,
              std::span<double> out) {
    std::vector<double> scratch;
    q_values(net, s, actions, out, scratch);
}

void q_values(const QNetwork& net, const StateInput& s, std::span<const ActionInput> actions,
              std::span<double> out, std::vector<double>& scratch) {
    if (out.size() != actions.size()) throw DimensionMismatch("q_values: output span size mismatch");
    const Topology& t = net.topology;
    scratch.resize(t.m + t.n + t.p + t.merge);
    double* h1 = scratch.data();
    double* h2 = h1 + t.m;
    double* ha = h2 + t.n;
    double* hm = ha + t.p;
    dense_relu(net.state1, s.data(), h1);
    dense_relu(net.state2, h1, h2);
    for (std::size_t k = 0; k < actions.size(); ++k) {
        dense_relu(net.action, actions[k].data(), ha);
        out[k] = merge_and_output(net, h2, ha, hm);
    }
}

void accumulate_q_gradient(const QNetwork& net, const StateInput& s, const ActionInput& a,
                           ForwardCache& cache, double scale, Gradient& grad) {
    const Topology& t = net.topology;
    const std::size_t n = t.n;

    // Output layer.
    std::vector<double>& d_hm = cache.d_hm;
    d_hm.resize(t.merge);
    for (std::size_t c = 0; c < t.merge; ++c) {
        grad.output.weights[c] += scale * cache.hm[c];
        d_hm[c] = cache.hm[c] > 0.0 ? scale * net.output.weights[c] : 0.0;
    }
    grad.output.biases[0] += scale;

    // Merge layer: pre-activation gradient d_hm, input is [h2, ha].
    std::vector<double>& d_h2 = cache.d_h2;
    std::vector<double>& d_ha = cache.d_ha;
    d_h2.assign(n, 0.0);
    d_ha.assign(t.p, 0.0);
    for (std::size_t r = 0; r < t.merge; ++r) {
        const double g = d_hm[r];
        if (g == 0.0) continue;
        double* grow = grad.merge.weights.data() + r * net.merge.in;
        const double* wrow = net.merge.weights.data() + r * net.merge.in;
        for (std::size_t c = 0; c < n; ++c) {
            grow[c] += g * cache.h2[c];
            d_h2[c] += g * wrow[c];
        }
        for (std::size_t c = 0; c < t.p; ++c) {
            grow[n + c] += g * cache.ha[c];
            d_ha[c] += g * wrow[n + c];
        }
        grad.merge.biases[r] += g;
    }

    // Action path.
    for (std::size_t r = 0; r < t.p; ++r) {
        if (!(cache.ha[r] > 0.0)) continue;
        const double g = d_ha[r];
        for (std::size_t c = 0; c < kActionInputs; ++c) grad.action.w(r, c) += g * a[c];
        grad.action.biases[r] += g;
    }

    // State path, second then first hidden layer.
    std::vector<double>& d_h1 = cache.d_h1;
    d_h1.assign(t.m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        if (!(cache.h2[r] > 0.0)) continue;
        const double g = d_h2[r];
        for (std::size_t c = 0; c < t.m; ++c) {
            grad.state2.w(r, c) += g * cache.h1[c];
            d_h1[c] += g * net.state2.w(r, c);
        }
        grad.state2.biases[r] += g;
    }
    for (std::size_t r = 0; r < t.m; ++r) {
        if (!(cache.h1[r] > 0.0)) continue;
        const double g = d_h1[r];
        for (std::size_t c = 0; c < kStateInputs; ++c) grad.state1.w(r, c) += g * s[c];
        grad.state1.biases[r] += g;
    }
}

Gradient gradient(const QNetwork& net, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
    Gradient grad(net.topology);
    ForwardCache cache;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const Sample& smp : batch) {
        const double q = forward(net, smp.s, smp.a, cache);
        accumulate_q_gradient(net, smp.s, smp.a, cache, -2.0 * (smp.target - q) * inv_b, grad);
    }
    return grad;
}

double mse_loss(const QNetwork& net, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("mse_loss: empty batch");
    double acc = 0.0;
    for (const Sample& smp : batch) {
        const double r = smp.target - forward(net, smp.s, smp.a);
        acc += r * r;
    }
    return acc / static_cast<double>(batch.size());
}

void sgd_update_in_place(QNetwork& net, const Gradient& grad, double lr) {
    if (!(net.topology == grad.topology)) throw DimensionMismatch("sgd_update: gradient topology mismatch");
    auto dst = net.layers();
    auto src = grad.layers();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        for (std::size_t i = 0; i < dst[k]->weights.size(); ++i) dst[k]->weights[i] -= lr * src[k]->weights[i];
        for (std::size_t i = 0; i < dst[k]->biases.size(); ++i) dst[k]->biases[i] -= lr * src[k]->biases[i];
    }
}

QNetwork sgd_update(const QNetwork& net, const Gradient& grad, double lr) {
    QNetwork out = net;
    sgd_update_in_place(out, grad, lr);
    return out;
}

QNetwork init_network(std::uint64_t seed, const Topology& topology) {
    QNetwork net(topology);
    std::mt19937_64 rng(seed);
    for (Layer* layer : net.layers()) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer->in + layer->out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer->weights) w = dist(rng);
    }
    return net;
}

std::size_t parameter_count(const QNetwork& net) {
    std::size_t count = 0;
    for (const Layer* layer : net.layers()) count += layer->weights.size() + layer->biases.size();
    return count;
}

std::vector<double> flatten(const QNetwork& net) {
    std::vector<double> out;
    out.reserve(parameter_count(net));
    for (const Layer* layer : net.layers()) {
        out.insert(out.end(), layer->weights.begin(), layer->weights.end());
        out.insert(out.end(), layer->biases.begin(), layer->biases.end());
    }
    return out;
}

void unflatten(std::span<const double> values, QNetwork& net) {
    if (values.size() != parameter_count(net)) throw DimensionMismatch("unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (Layer* layer : net.layers()) {
        for (double& w : layer->weights) w = values[k++];
        for (double& b : layer->biases) b = values[k++];
    }
}

std::string serialize(const QNetwork& net) {
    std::string out;
    const Topology& t = net.topology;
    out += kCheckpointMagic;
    out += "\nversion " + std::to_string(kCheckpointVersion);
    out += "\ntopology " + std::to_string(t.m) + ' ' + std::to_string(t.n) + ' ' + std::to_string(t.p) + ' ' +
           std::to_string(t.merge) + '\n';
    char buf[64];
    for (double v : flatten(net)) {
        // Shortest representation that parses back to the same double.
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.append(buf, res.ptr);
        out += '\n';
    }
    return out;
}

QNetwork deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) throw MalformedCheckpoint("checkpoint: bad magic");

    std::string key;
    int version = 0;
    if (!std::getline(in, line)) throw MalformedCheckpoint("checkpoint: missing version");
    std::istringstream vs(line);
    if (!(vs >> key >> version) || key != "version") throw MalformedCheckpoint("checkpoint: bad version line");
    if (version != kCheckpointVersion)
        throw MalformedCheckpoint("checkpoint: unsupported version " + std::to_string(version));

    Topology t;
    if (!std::getline(in, line)) throw MalformedCheckpoint("checkpoint: missing topology");
    std::istringstream ts(line);
    if (!(ts >> key >> t.m >> t.n >> t.p >> t.merge) || key != "topology")
        throw MalformedCheckpoint("checkpoint: bad topology line");
    if (t.m == 0 || t.n == 0 || t.p == 0 || t.merge == 0) throw MalformedCheckpoint("checkpoint: zero width");

    QNetwork net(t);
    std::vector<double> values;
    values.reserve(t.parameter_count());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v = 0.0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size())
            throw MalformedCheckpoint("checkpoint: bad value '" + line + "'");
        values.push_back(v);
    }
    if (values.size() != t.parameter_count())
        throw MalformedCheckpoint("checkpoint: expected " + std::to_string(t.parameter_count()) +
                                  " values, found " + std::to_string(values.size()));
    unflatten(values, net);
    return net;
}

void save_checkpoint(const QNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << serialize(net);
}

QNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedCheckpoint("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace buckrl
