#pragma once

// On-policy trust-region actor-critic: the sparse-reward baseline and the
// learner underneath the reward-sum and HRL variants.

#include <chrono>
#include <iostream>

#include "irpo/core/irpo.hpp"

namespace irpo {

struct PolicyLearnerOptions {
    int episodes = 16;
    double delta_kl = 1e-2;
    CriticOptions critic;
    TrustRegionConfig trust_region;
};

inline PolicyLearnerOptions baseline_options(const RunConfig& cfg, double gamma) {
    return {cfg.baseline.episodes, cfg.baseline.delta_kl, critic_options(cfg.critic, gamma, cfg.baseline.critic_lr),
            cfg.trust_region};
}

/// Actor and critic state of one on-policy learner.
struct PolicyLearner {
    ParamVector actor;
    Critic critic;
};

struct PolicyStep {
    Batch batch;
    TrustRegionResult step;
};

/// Collect, fit the critic on `reward`, then take one KL-bounded step on the
/// advantage-weighted policy gradient.
inline PolicyStep policy_learner_step(const GridContext& ctx, PolicyLearner& learner, const RewardChannel& reward,
                                      const PolicyLearnerOptions& opts, Rng& rng, SampleCounter& counter) {
    const auto net = ctx.policy_net();
    PolicyStep out;
    out.batch = collect(ctx.grid, net.table(learner.actor), ctx.intrinsic, opts.episodes, rng, counter);
    fit_critic(ctx.critic, learner.critic, ctx.features, out.batch, reward, opts.critic);
    const auto adv =
        advantages(out.batch, value_table(ctx.critic, learner.critic.params, ctx.features), reward, opts.critic.gamma);
    const Vec g = policy_gradient(net, learner.actor, out.batch, adv);
    out.step = policy_trust_region_step(ctx, learner.actor, g, opts.delta_kl,
                                        state_distribution(out.batch, ctx.num_states()), opts.trust_region);
    learner.actor = out.step.params;
    return out;
}

inline PolicyLearner init_policy_learner(const GridContext& ctx, Rng& rng) {
    PolicyLearner l;
    l.actor = init_actor(ctx.actor, rng);
    l.critic.params = init_critic(ctx.critic, rng);
    return l;
}

/// `reward` defaults to the extrinsic reward; other channels turn this into
/// the reward-sum baseline or a shaped sanity check.
inline TrainResult vanilla_pg_train(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {},
                                    const RewardChannel& reward = extrinsic_channel()) {
    const auto clock_start = std::chrono::steady_clock::now();
    const auto net = ctx.policy_net();
    const PolicyLearnerOptions opts = baseline_options(cfg, ctx.grid.gamma);
    if (opts.episodes < 1) throw ConfigError("baseline.episodes must be >= 1");

    Rng init_rng = make_rng(cfg.seed, kStreamInit);
    PolicyLearner learner = init_policy_learner(ctx, init_rng);
    Rng rng = make_rng(cfg.seed, kStreamBase);
    Rng eval_rng = make_rng(cfg.seed, kStreamEval);
    EvalSchedule schedule(cfg.eval.interval);
    const auto cost = static_cast<std::uint64_t>(opts.episodes) * static_cast<std::uint64_t>(ctx.grid.horizon);

    TrainResult result;
    SampleCounter counter;
    EvalResult last_eval;
    while (counter.used + cost <= cfg.budget) {
        const PolicyStep ps = policy_learner_step(ctx, learner, reward, opts, rng, counter);
        ++result.iterations;
        if (!ps.step.warning.empty()) std::cerr << "[iteration " << result.iterations << "] " << ps.step.warning << '\n';
        if (ps.step.accepted) result.accepted_kl.push_back(ps.step.kl);
        else ++result.rejected_steps;
        if (schedule.due(counter.used)) last_eval = evaluate(net.table(learner.actor), ctx.grid, cfg.eval.episodes, eval_rng);

        MetricsRow row;
        row.samples = counter.used;
        row.iteration = result.iterations;
        row.eval_return = last_eval.mean_return;
        row.success = last_eval.success_rate;
        row.kl_step = ps.step.kl;
        row.tau = 1.0;
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        result.rows.push_back(row);
        if (sinks.metrics) sinks.metrics(row);
        if (sinks.params) sinks.params(result.iterations, counter.used, learner.actor, learner.actor);
    }
    result.base = learner.actor;
    result.output_policy = learner.actor;
    result.samples = counter.used;
    if (result.iterations > 0) {
        result.final_eval = evaluate(net.table(learner.actor), ctx.grid, cfg.eval.episodes, eval_rng);
        result.final_base_eval = result.final_eval;
    }
    return result;
}

}  // namespace irpo
