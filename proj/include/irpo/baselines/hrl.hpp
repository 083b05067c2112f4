#pragma once

// Option-based hierarchical baseline. K subpolicies are pretrained on the
// intrinsic rewards, then a high-level policy chooses among them plus a
// random walk; every option runs for a bounded number of primitive steps.

#include <chrono>
#include <iostream>

#include "irpo/baselines/vanilla.hpp"

namespace irpo {

struct OptionPolicy {
    std::vector<PolicyTable> subpolicies;  // K pretrained tables; the random walk is implicit
    ParamVector high_level;
    MlpSpec high_spec;
    int max_steps = 10;
    int stall_steps = 3;

    int num_options() const { return static_cast<int>(subpolicies.size()) + 1; }
    bool is_random_walk(int option) const { return option == static_cast<int>(subpolicies.size()); }
};

struct OptionOutcome {
    GridState state;
    double discounted_reward = 0.0;
    int steps = 0;
    bool reached_goal = false;
};

/// Runs one option from `state` until it has taken max_steps primitive steps,
/// its intrinsic reward stayed <= 0 for stall_steps consecutive steps, or the
/// episode ended. `greedy` selects argmax subpolicy actions.
inline OptionOutcome run_option(const GridContext& ctx, const OptionPolicy& options, int option, GridState state,
                                bool greedy, Rng& rng, SampleCounter& counter) {
    OptionOutcome out;
    int stalled = 0;
    double discount = 1.0;
    std::uniform_int_distribution<int> uniform(0, kNumActions - 1);
    while (!state.done && out.steps < options.max_steps) {
        const int s = ctx.grid.state_of(state.agent);
        int a;
        if (options.is_random_walk(option)) a = uniform(rng);
        else {
            const auto& table = options.subpolicies[static_cast<std::size_t>(option)];
            a = greedy ? greedy_action(table, s, rng) : sample_action(table, s, rng);
        }
        const StepResult r = step(ctx.grid, state, static_cast<Action>(a));
        ++counter.used;
        ++out.steps;
        out.discounted_reward += discount * r.reward;
        discount *= ctx.grid.gamma;
        out.reached_goal = out.reached_goal || r.reached_goal;
        if (!options.is_random_walk(option)) {
            const double ri = ctx.intrinsic.transition_reward(option, s, ctx.grid.state_of(r.next.agent));
            stalled = ri <= 0.0 ? stalled + 1 : 0;
        }
        state = r.next;
        if (stalled >= options.stall_steps) break;
    }
    out.state = state;
    return out;
}

/// One high-level episode; each transition is an option with its duration and
/// discounted in-option reward.
inline Trajectory option_rollout(const GridContext& ctx, const OptionPolicy& options, const PolicyTable& high,
                                 Rng& rng, SampleCounter& counter) {
    Trajectory traj;
    GridState state = reset(ctx.grid);
    while (!state.done) {
        Transition tr;
        tr.state = ctx.grid.state_of(state.agent);
        tr.obs = ctx.grid.observe(state.agent);
        tr.action = sample_action(high, tr.state, rng);
        tr.log_prob = std::log(high(tr.state, tr.action));
        const OptionOutcome o = run_option(ctx, options, tr.action, state, false, rng, counter);
        tr.reward = o.discounted_reward;
        tr.duration = o.steps;
        tr.next_state = ctx.grid.state_of(o.state.agent);
        tr.next_obs = ctx.grid.observe(o.state.agent);
        tr.terminal = o.state.done;
        tr.truncated = o.state.done && !o.reached_goal;
        traj.steps.push_back(std::move(tr));
        state = o.state;
    }
    return traj;
}

/// Semi-Markov lambda-returns: an option lasting d steps discounts by gamma^d.
inline std::vector<double> smdp_lambda_returns(const Trajectory& traj, const Vec& table, double gamma, double lambda) {
    check_discounting(gamma, lambda);
    const auto values = trajectory_values(traj, table);
    std::vector<double> out(traj.size());
    double next = values.back();
    for (std::size_t t = traj.size(); t-- > 0;) {
        const double g = std::pow(gamma, traj.steps[t].duration);
        next = traj.steps[t].reward + g * ((1.0 - lambda) * values[t + 1] + lambda * next);
        out[t] = next;
    }
    return out;
}

inline std::vector<double> smdp_advantages(const Batch& batch, const Vec& table, double gamma) {
    std::vector<double> adv;
    for (const auto& traj : batch)
        for (const auto& tr : traj.steps) {
            const double next = (tr.terminal && !tr.truncated) ? 0.0 : table[tr.next_state];
            adv.push_back(tr.reward + std::pow(gamma, tr.duration) * next - table[tr.state]);
        }
    normalize_advantages(adv);
    return adv;
}

inline void fit_smdp_critic(const GridContext& ctx, Critic& critic, const Batch& batch, const CriticOptions& opts) {
    for (int e = 0; e < opts.epochs; ++e) {
        const Vec table = value_table(ctx.critic, critic.params, ctx.features);
        CriticBatch cb;
        for (const auto& traj : batch) {
            if (traj.steps.empty()) continue;
            const auto targets = smdp_lambda_returns(traj, table, opts.gamma, opts.lambda);
            for (std::size_t t = 0; t < traj.size(); ++t) {
                cb.states.push_back(traj.steps[t].state);
                cb.targets.push_back(targets[t]);
            }
        }
        if (cb.states.empty()) return;
        const Vec g = critic_loss_gradient(ctx.critic, critic.params, ctx.features, cb);
        critic.params = opts.optimizer == CriticOptimizer::adam ? adam_step(critic.params, g, opts.lr, critic.adam)
                                                                : Vec(critic.params - opts.lr * g);
    }
}

/// Greedy evaluation: argmax option, argmax subpolicy actions.
inline EvalResult evaluate_options(const GridContext& ctx, const OptionPolicy& options, const PolicyTable& high,
                                   int episodes, Rng& rng) {
    expects(episodes >= 1, "evaluate: episodes must be >= 1");
    EvalResult r;
    SampleCounter unused;
    for (int e = 0; e < episodes; ++e) {
        GridState state = reset(ctx.grid);
        double discount = 1.0;
        while (!state.done) {
            const int o = greedy_action(high, ctx.grid.state_of(state.agent), rng);
            const OptionOutcome out = run_option(ctx, options, o, state, true, rng, unused);
            r.mean_return += discount * out.discounted_reward;
            discount *= std::pow(ctx.grid.gamma, out.steps);
            if (out.reached_goal) r.success_rate += 1.0;
            state = out.state;
        }
    }
    r.mean_return /= episodes;
    r.success_rate /= episodes;
    return r;
}

/// Pretrains one subpolicy per intrinsic reward for `samples_each`
/// transitions (charged to `counter`, never beyond `budget`).
inline std::vector<PolicyTable> pretrain_subpolicies(const RunConfig& cfg, const GridContext& ctx,
                                                     SampleCounter& counter) {
    const auto net = ctx.policy_net();
    PolicyLearnerOptions opts = baseline_options(cfg, ctx.grid.gamma);
    const auto cost = static_cast<std::uint64_t>(opts.episodes) * static_cast<std::uint64_t>(ctx.grid.horizon);
    std::vector<PolicyTable> tables;
    for (int k = 0; k < ctx.intrinsic.count(); ++k) {
        Rng init_rng = make_rng(cfg.seed, kStreamPretrain, 2 * static_cast<std::uint64_t>(k));
        Rng rng = make_rng(cfg.seed, kStreamPretrain, 2 * static_cast<std::uint64_t>(k) + 1);
        PolicyLearner learner = init_policy_learner(ctx, init_rng);
        const std::uint64_t start = counter.used;
        while (counter.used - start + cost <= cfg.hrl.pretrain_samples && counter.used + cost <= cfg.budget)
            policy_learner_step(ctx, learner, intrinsic_channel(k), opts, rng, counter);
        tables.push_back(net.table(learner.actor));
    }
    return tables;
}

inline TrainResult hrl_train(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {},
                             OptionPolicy* trained = nullptr) {
    if (cfg.hrl.option_steps < 1) throw ConfigError("hrl.option_steps must be >= 1");
    if (cfg.hrl.stall_steps < 1) throw ConfigError("hrl.stall_steps must be >= 1");
    const auto clock_start = std::chrono::steady_clock::now();
    const PolicyLearnerOptions opts = baseline_options(cfg, ctx.grid.gamma);
    if (opts.episodes < 1) throw ConfigError("baseline.episodes must be >= 1");

    SampleCounter counter;
    OptionPolicy options;
    options.max_steps = cfg.hrl.option_steps;
    options.stall_steps = cfg.hrl.stall_steps;
    options.subpolicies = pretrain_subpolicies(cfg, ctx, counter);
    options.high_spec = actor_spec(64, static_cast<std::size_t>(options.num_options()));
    const PolicyNet high_net{options.high_spec, &ctx.features};

    Rng init_rng = make_rng(cfg.seed, kStreamInit);
    options.high_level = init_actor(options.high_spec, init_rng);
    Critic critic;
    critic.params = init_critic(ctx.critic, init_rng);
    Rng rng = make_rng(cfg.seed, kStreamBase);
    Rng eval_rng = make_rng(cfg.seed, kStreamEval);
    EvalSchedule schedule(cfg.eval.interval);
    const auto cost = static_cast<std::uint64_t>(opts.episodes) * static_cast<std::uint64_t>(ctx.grid.horizon);

    TrainResult result;
    EvalResult last_eval;
    while (counter.used + cost <= cfg.budget) {
        const PolicyTable high = high_net.table(options.high_level);
        Batch batch;
        for (int e = 0; e < opts.episodes; ++e) batch.push_back(option_rollout(ctx, options, high, rng, counter));
        fit_smdp_critic(ctx, critic, batch, opts.critic);
        const auto adv = smdp_advantages(batch, value_table(ctx.critic, critic.params, ctx.features), ctx.grid.gamma);
        const Vec g = policy_gradient(high_net, options.high_level, batch, adv);
        const TrustRegionResult step = policy_trust_region_step(high_net, options.high_level, g, opts.delta_kl,
                                                                state_distribution(batch, ctx.num_states()),
                                                                opts.trust_region);
        options.high_level = step.params;
        ++result.iterations;
        if (!step.warning.empty()) std::cerr << "[iteration " << result.iterations << "] " << step.warning << '\n';
        if (step.accepted) result.accepted_kl.push_back(step.kl);
        else ++result.rejected_steps;
        if (schedule.due(counter.used))
            last_eval = evaluate_options(ctx, options, high_net.table(options.high_level), cfg.eval.episodes, eval_rng);

        MetricsRow row;
        row.samples = counter.used;
        row.iteration = result.iterations;
        row.eval_return = last_eval.mean_return;
        row.success = last_eval.success_rate;
        row.kl_step = step.kl;
        row.tau = 1.0;
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        result.rows.push_back(row);
        if (sinks.metrics) sinks.metrics(row);
        if (sinks.params) sinks.params(result.iterations, counter.used, options.high_level, options.high_level);
    }
    result.base = options.high_level;
    result.output_policy = options.high_level;
    result.samples = counter.used;
    if (result.iterations > 0) {
        result.final_eval = evaluate_options(ctx, options, high_net.table(options.high_level), cfg.eval.episodes, eval_rng);
        result.final_base_eval = result.final_eval;
    }
    if (trained) *trained = options;
    return result;
}

}  // namespace irpo
