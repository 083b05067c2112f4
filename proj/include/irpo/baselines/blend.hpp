#pragma once

// IRPO whose base update mixes in the true policy gradient of the base
// policy once extrinsic reward has been observed.

#include <cmath>
#include <memory>
#include <optional>

#include "irpo/baselines/vanilla.hpp"

namespace irpo {

struct BlendSchedule {
    BlendMode mode = BlendMode::abrupt;
    double value = 0.0;       // constant mode
    double timescale = 20.0;  // iterations

    /// Mixing coefficient at `iteration` given the first iteration that saw
    /// positive reward (none yet: nullopt).
    double beta(int iteration, std::optional<int> trigger) const {
        if (mode == BlendMode::constant) return value;
        if (!trigger || iteration < *trigger) return 0.0;
        const double since = iteration - *trigger;
        switch (mode) {
        case BlendMode::abrupt: return 1.0;
        case BlendMode::exponential: return 1.0 - std::exp(-since / timescale);
        case BlendMode::linear: return std::min(1.0, since / timescale);
        case BlendMode::constant: break;
        }
        return value;
    }

    /// True when the schedule can never leave 0, so no base rollouts are needed.
    bool always_zero() const { return mode == BlendMode::constant && value == 0.0; }
};

inline BlendSchedule blend_schedule(const BlendConfig& c) {
    if (c.mode == BlendMode::constant && !(c.value >= 0.0 && c.value <= 1.0))
        throw ConfigError("blend.value must lie in [0, 1]");
    if (!(c.timescale > 0.0)) throw ConfigError("blend.timescale must be positive");
    return {c.mode, c.value, c.timescale};
}

struct BlendState {
    PolicyLearner base_critic;  // only the critic is used; the actor is the IRPO base
    Rng rng;
    std::optional<int> trigger;
    std::vector<double> betas;
};

/// (1 - beta) IRPO gradient + beta true gradient. True-gradient rollouts use
/// their own RNG stream and are charged to the budget.
inline TrainResult blended_train(const RunConfig& cfg, const GridContext& ctx, const BlendSchedule& schedule,
                                 const TrainSinks& sinks = {}, std::vector<double>* betas = nullptr) {
    Rng init_rng = make_rng(cfg.seed, kStreamBase, 1);
    auto state = std::make_shared<BlendState>(BlendState{{}, make_rng(cfg.seed, kStreamBase), std::nullopt, {}});
    state->base_critic.critic.params = init_critic(ctx.critic, init_rng);
    const int episodes = cfg.blend.true_episodes;
    if (episodes < 1) throw ConfigError("blend.true_episodes must be >= 1");
    const CriticOptions copts = critic_options(cfg.critic, ctx.grid.gamma);

    IrpoHooks hooks;
    if (!schedule.always_zero())
        hooks.extra_samples_per_iteration =
            static_cast<std::uint64_t>(episodes) * static_cast<std::uint64_t>(ctx.grid.horizon);
    hooks.post_process = [&, state](const IrpoGradient& g, const BaseUpdateContext& bc) -> Vec {
        if (bc.positive_reward_seen && !state->trigger) state->trigger = bc.iteration;
        const double beta = schedule.beta(bc.iteration, state->trigger);
        state->betas.push_back(beta);
        if (beta == 0.0) return g.vector;
        const auto net = ctx.policy_net();
        const Batch batch = collect(ctx.grid, net.table(*bc.theta), ctx.intrinsic, episodes, state->rng, *bc.counter);
        const RewardChannel extrinsic = extrinsic_channel();
        fit_critic(ctx.critic, state->base_critic.critic, ctx.features, batch, extrinsic, copts);
        const auto adv = advantages(batch, value_table(ctx.critic, state->base_critic.critic.params, ctx.features),
                                    extrinsic, ctx.grid.gamma);
        const Vec truth = policy_gradient(net, *bc.theta, batch, adv);
        return (1.0 - beta) * g.vector + beta * truth;
    };
    TrainResult r = train_irpo(cfg, ctx, sinks, hooks);
    if (betas) *betas = state->betas;
    return r;
}

}  // namespace irpo
