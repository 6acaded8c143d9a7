#pragma once

#include <cstddef>
#include <vector>

namespace buckrl {

/// Q[s][a] for small discrete problems.
using QTable = std::vector<std::vector<double>>;

/// Q(s,a) += lr * (r + gamma * max_a' Q(s_next, a') - Q(s,a)).
/// A terminal transition drops the bootstrap term.
void tabular_q_update(QTable& q, std::size_t s, std::size_t a, double r, std::size_t s_next, double lr,
                      double gamma, bool terminal = false);

}  // namespace buckrl
