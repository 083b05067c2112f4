#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

/// softmax(performance / tau), computed after subtracting the maximum.
inline Vec softmax_weights(const Vec& performance, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("temperature must lie in (0, 1]");
    if (performance.size() == 0) throw ConfigError("softmax over an empty set");
    if (!performance.allFinite()) throw NumericalError("performance estimates are not finite");
    const Vec z = ((performance.array() - performance.maxCoeff()) / tau).exp().matrix();
    return z / z.sum();
}

/// Linear decay from 1 at step 0 to `floor` at anneal_fraction * total_steps,
/// constant afterwards.
inline double anneal_tau(double step, double total_steps, double floor = 0.05, double anneal_fraction = 0.1) {
    if (!(total_steps > 0.0)) throw ConfigError("anneal_tau: total_steps must be positive");
    const double end = anneal_fraction * total_steps;
    if (end <= 0.0 || step >= end) return floor;
    return 1.0 - (1.0 - floor) * std::max(step, 0.0) / end;
}

struct IrpoGradient {
    Vec vector;
    Vec weights;
    double tau = 1.0;
};

/// Weighted sum of backpropagated gradients with softmax(perf / tau) weights.
inline IrpoGradient combine_gradients(const std::vector<Vec>& backpropagated, const Vec& performance, double tau) {
    expects(!backpropagated.empty() && static_cast<Eigen::Index>(backpropagated.size()) == performance.size(),
            "one performance estimate per backpropagated gradient required");
    IrpoGradient out{Vec::Zero(backpropagated.front().size()), softmax_weights(performance, tau), tau};
    for (std::size_t k = 0; k < backpropagated.size(); ++k)
        out.vector += out.weights[static_cast<Eigen::Index>(k)] * backpropagated[k];
    return out;
}

}  // namespace irpo
