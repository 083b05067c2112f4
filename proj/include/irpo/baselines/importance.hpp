#pragma once

// Importance-sampling variant of the IRPO gradient: each exploratory run's
// extrinsic gradient is re-expressed at the base policy with per-sample
// likelihood ratios instead of being backpropagated through the updates.

#include <cmath>
#include <memory>

#include "irpo/core/irpo.hpp"

namespace irpo {

inline constexpr double kMaxImportanceRatio = 1e6;

struct ImportanceGradient {
    ParamVector gradient;
    std::vector<double> ratios;
    int clipped = 0;
};

/// E[rho(s,a) A(s,a) grad log pi_theta(a|s)] over the run's final rollouts,
/// rho = pi_theta / pi_theta~ and A from the exploratory extrinsic critic.
inline ImportanceGradient is_gradient(const GridContext& ctx, const ParamVector& theta, const ExploratoryRun& run) {
    const auto net = ctx.policy_net();
    const Mat base_log = net.log_table(theta);
    const Mat explore_log = net.log_table(run.final_params());
    ImportanceGradient out;
    std::vector<double> weighted;
    weighted.reserve(run.final_advantages.size());
    std::size_t i = 0;
    for (const auto& traj : run.final_batch)
        for (const auto& tr : traj.steps) {
            double rho = std::exp(base_log(tr.state, tr.action) - explore_log(tr.state, tr.action));
            if (!(rho <= kMaxImportanceRatio)) {
                rho = kMaxImportanceRatio;
                ++out.clipped;
            }
            out.ratios.push_back(rho);
            weighted.push_back(rho * run.final_advantages[i++]);
        }
    out.gradient = policy_gradient(net, theta, run.final_batch, weighted);
    return out;
}

/// Hooks replacing backpropagation with the importance-sampled estimate.
inline IrpoHooks importance_hooks(const GridContext& ctx, std::shared_ptr<long> clipped_total = nullptr) {
    IrpoHooks hooks;
    hooks.per_run_gradient = [&ctx, clipped_total](const ExploratoryRun& run) {
        auto g = is_gradient(ctx, run.params.front(), run);
        if (g.clipped > 0) {
            std::cerr << "importance ratios clipped: " << g.clipped << " (k=" << run.k << ")\n";
            if (clipped_total) *clipped_total += g.clipped;
        }
        return Vec(g.gradient);
    };
    return hooks;
}

inline TrainResult is_irpo_train(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {}) {
    return train_irpo(cfg, ctx, sinks, importance_hooks(ctx));
}

}  // namespace irpo
