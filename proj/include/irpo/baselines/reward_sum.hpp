#pragma once

#include "irpo/baselines/vanilla.hpp"

namespace irpo {

/// r + bonus * mean_k r~_k for one transition.
inline RewardChannel reward_sum_channel(double bonus) {
    return [bonus](const Transition& t) {
        if (t.intrinsic.empty()) return t.reward;
        double s = 0.0;
        for (double r : t.intrinsic) s += r;
        return t.reward + bonus * (s / static_cast<double>(t.intrinsic.size()));
    };
}

/// Vanilla actor-critic on the extrinsic reward augmented with the mean
/// intrinsic reward. Evaluation still reports extrinsic success only.
inline TrainResult reward_sum_train(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {}) {
    if (!(cfg.reward_sum.bonus >= 0.0)) throw ConfigError("reward_sum.bonus must be >= 0");
    return vanilla_pg_train(cfg, ctx, sinks, reward_sum_channel(cfg.reward_sum.bonus));
}

}  // namespace irpo
