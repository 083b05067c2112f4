#pragma once

#include <cmath>
#include <functional>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

using LinearOperator = std::function<Vec(const Vec&)>;

struct CgResult {
    Vec x;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Solves (A + damping I) x = b for symmetric PSD A. Stops once the residual
/// falls below 1e-8 ||b|| or after `iters` iterations.
inline CgResult conjugate_gradient(const LinearOperator& apply_a, const Vec& b, int iters, double damping) {
    CgResult out{Vec::Zero(b.size()), b.norm(), 0};
    const double target = 1e-8 * b.norm();
    if (out.residual_norm <= target) return out;

    Vec r = b;
    Vec p = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < iters; ++it) {
        Vec ap = apply_a(p);
        if (ap.size() != b.size()) throw ConfigError("conjugate_gradient: operator changed vector length");
        ap += damping * p;
        const double pap = p.dot(ap);
        if (!std::isfinite(pap) || pap <= 0.0)
            throw NumericalError("conjugate_gradient: operator is not positive definite along search direction");
        const double alpha = rr / pap;
        out.x += alpha * p;
        r -= alpha * ap;
        const double rr_next = r.squaredNorm();
        out.iterations = it + 1;
        out.residual_norm = std::sqrt(rr_next);
        if (!std::isfinite(rr_next) || !out.x.allFinite())
            throw NumericalError("conjugate_gradient: non-finite iterate");
        if (out.residual_norm <= target) break;
        p = r + (rr_next / rr) * p;
        rr = rr_next;
    }
    return out;
}

}  // namespace irpo
