#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "irpo/numerics/cg.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

struct TrustRegionOptions {
    int cg_iters = 10;
    double damping = 1e-2;
    int backtracks = 10;
};

struct TrustRegionResult {
    ParamVector params;
    double kl = 0.0;            // measured KL of the accepted step, 0 if rejected
    double step_norm = 0.0;
    int backtracks_used = 0;
    bool accepted = false;
    bool used_fallback = false;  // CG failed; raw gradient direction was searched
    std::string warning{};
};

using KlFunction = std::function<double(const ParamVector&)>;

/// Maximises g . (theta' - theta) subject to KL(pi_theta || pi_theta') <= delta:
/// natural direction d = F^-1 g by conjugate gradient, scaled to the quadratic
/// KL boundary, then halved until the measured KL fits.
inline TrustRegionResult trust_region_step(const ParamVector& theta, const Vec& g, double delta_kl,
                                           const LinearOperator& fisher, const KlFunction& measure_kl,
                                           const TrustRegionOptions& opts = {}) {
    if (!(delta_kl > 0.0)) throw ConfigError("trust region: delta_kl must be positive");
    if (g.size() != theta.size()) throw ConfigError("trust region: gradient length mismatch");
    TrustRegionResult out{theta};
    if (g.squaredNorm() == 0.0) {
        out.accepted = true;
        return out;
    }
    require_finite(g, "trust-region gradient");

    auto damped = [&](const Vec& v) -> Vec { return fisher(v) + opts.damping * v; };
    Vec direction;
    double curvature = 0.0;
    try {
        direction = conjugate_gradient(fisher, g, opts.cg_iters, opts.damping).x;
        curvature = direction.dot(damped(direction));
        if (!std::isfinite(curvature) || curvature <= 0.0) throw NumericalError("non-positive curvature");
    } catch (const NumericalError&) {
        out.used_fallback = true;
        direction = g;
        curvature = direction.dot(damped(direction));
        if (!std::isfinite(curvature) || curvature <= 0.0) curvature = direction.squaredNorm();
    }

    const Vec full_step = std::sqrt(2.0 * delta_kl / curvature) * direction;
    double frac = 1.0;
    for (int i = 0; i < opts.backtracks; ++i, frac *= 0.5) {
        const ParamVector candidate = theta + frac * full_step;
        const double kl = measure_kl(candidate);
        if (std::isfinite(kl) && kl <= delta_kl) {
            out.params = candidate;
            out.kl = kl;
            out.step_norm = frac * full_step.norm();
            out.backtracks_used = i;
            out.accepted = true;
            return out;
        }
    }
    out.backtracks_used = opts.backtracks;
    out.warning = "trust region: no step satisfied the KL bound; parameters left unchanged";
    return out;
}

}  // namespace irpo
