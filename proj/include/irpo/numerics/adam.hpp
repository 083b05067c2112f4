#pragma once

#include <cmath>

#include "irpo/numerics/linalg.hpp"

namespace irpo {

/// First and second moment estimates of an Adam optimizer.
struct AdamState {
    Vec m;
    Vec v;
    long t = 0;
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Descent step params - lr * m_hat / (sqrt(v_hat) + eps).
inline ParamVector adam_step(const ParamVector& params, const Vec& grad, double lr, AdamState& state,
                             const AdamOptions& opts = {}) {
    if (state.m.size() != params.size()) {
        state.m = Vec::Zero(params.size());
        state.v = Vec::Zero(params.size());
        state.t = 0;
    }
    ++state.t;
    state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
    state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.t));
    const Vec denom = ((state.v / c2).array().sqrt() + opts.eps).matrix();
    return params - lr * ((state.m / c1).array() / denom.array()).matrix();
}

}  // namespace irpo
