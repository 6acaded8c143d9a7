#include "buckrl/tabular.hpp"

#include <algorithm>
#include <stdexcept>

namespace buckrl {

void tabular_q_update(QTable& q, std::size_t s, std::size_t a, double r, std::size_t s_next, double lr,
                      double gamma, bool terminal) {
    if (s >= q.size() || s_next >= q.size() || a >= q[s].size())
        throw std::out_of_range("tabular_q_update: index out of range");
    const double bootstrap = terminal ? 0.0 : *std::max_element(q[s_next].begin(), q[s_next].end());
    q[s][a] += lr * (r + gamma * bootstrap - q[s][a]);
}

}  // namespace buckrl
