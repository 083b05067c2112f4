#pragma once

// Intrinsic reward policy optimization on gridworlds.
//
// Each iteration copies the base policy into K exploratory policies, takes N
// recorded ascent steps on each one's intrinsic reward, estimates the
// extrinsic policy gradient at every final exploratory policy, pulls those
// gradients back through the recorded steps, mixes them with softmax weights
// over the exploratory returns and moves the base policy inside a KL ball.

#include <chrono>
#include <functional>
#include <iostream>
#include <vector>

#include "irpo/config.hpp"
#include "irpo/core/context.hpp"
#include "irpo/core/exploratory.hpp"
#include "irpo/core/trust_region.hpp"
#include "irpo/core/weights.hpp"
#include "irpo/harness/evaluate.hpp"
#include "irpo/harness/metrics.hpp"

namespace irpo {

struct ExploratoryRun {
    int k = 0;
    std::vector<ParamVector> params;  // theta~(1) .. theta~(N+1)
    UpdateTape tape;
    double performance = 0.0;  // mean return of the final rollouts
    ParamVector final_gradient;
    Batch final_batch;
    std::vector<double> final_advantages;
    Vec final_value_table;  // extrinsic critic used for final_advantages

    const ParamVector& final_params() const { return params.back(); }
};

/// One ascent step on the intrinsic-advantage policy gradient, recorded so its
/// Jacobian can be applied later against the same samples.
inline ExploratoryStep exploratory_update(const GridContext& ctx, const ParamVector& theta, const Batch& batch,
                                          const std::vector<double>& intrinsic_advantages, double eta,
                                          UpdateTape& record) {
    const auto net = ctx.policy_net();
    Surrogate s = record_surrogate(net, theta,
                                   transition_weights(batch, intrinsic_advantages, ctx.num_states(),
                                                      static_cast<int>(ctx.actor.output_dim)));
    return exploratory_update(std::move(s.tape), s.objective, eta, record);
}

/// Runs N recorded intrinsic updates from theta for channel k, then collects
/// fresh rollouts under the final policy for its extrinsic gradient.
inline ExploratoryRun run_exploratory(const GridContext& ctx, const RunConfig& cfg, const ParamVector& theta, int k,
                                      CriticPair& critics, Rng& rng, SampleCounter& counter) {
    expects(cfg.irpo.N >= 1, "exploratory phase: N must be >= 1");
    const auto net = ctx.policy_net();
    const double gamma = ctx.grid.gamma;
    const CriticOptions copts = critic_options(cfg.critic, gamma);
    const RewardChannel intrinsic = intrinsic_channel(k);
    const RewardChannel extrinsic = extrinsic_channel();

    ExploratoryRun run;
    run.k = k;
    run.params.push_back(theta);
    for (int j = 0; j < cfg.irpo.N; ++j) {
        const ParamVector& current = run.params.back();
        const Batch batch = collect(ctx.grid, net.table(current), ctx.intrinsic, cfg.irpo.explore_episodes, rng, counter);
        fit_critic(ctx.critic, critics.intrinsic, ctx.features, batch, intrinsic, copts);
        fit_critic(ctx.critic, critics.extrinsic, ctx.features, batch, extrinsic, copts);
        const auto adv =
            advantages(batch, value_table(ctx.critic, critics.intrinsic.params, ctx.features), intrinsic, gamma);
        ExploratoryStep step;
        try {
            step = exploratory_update(ctx, current, batch, adv, cfg.irpo.eta, run.tape);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (k=" + std::to_string(k) + ", j=" + std::to_string(j + 1) +
                                 ", seed=" + std::to_string(cfg.seed) + ")");
        }
        run.params.push_back(std::move(step.next));
    }

    const ParamVector& last = run.params.back();
    run.final_batch = collect(ctx.grid, net.table(last), ctx.intrinsic, cfg.irpo.final_episodes, rng, counter);
    run.performance = mean_discounted_return(run.final_batch, cfg.irpo.discounted_performance ? gamma : 1.0);
    run.final_value_table = value_table(ctx.critic, critics.extrinsic.params, ctx.features);
    run.final_advantages = advantages(run.final_batch, run.final_value_table, extrinsic, gamma);
    run.final_gradient = policy_gradient(net, last, run.final_batch, run.final_advantages);
    fit_critic(ctx.critic, critics.extrinsic, ctx.features, run.final_batch, extrinsic, copts);
    return run;
}

/// The extrinsic gradient of the final exploratory policy pulled back to the
/// base parameters through every recorded step.
inline ParamVector backprop_through_updates(const ExploratoryRun& run) {
    if (run.final_gradient.size() != run.params.front().size())
        throw ConfigError("backprop_through_updates: gradient length does not match parameters");
    return run.tape.vjp(run.final_gradient);
}

inline IrpoGradient irpo_gradient(const std::vector<ExploratoryRun>& runs, double tau,
                                  const std::function<Vec(const ExploratoryRun&)>& per_run = backprop_through_updates) {
    std::vector<Vec> grads;
    Vec perf(static_cast<Eigen::Index>(runs.size()));
    for (std::size_t k = 0; k < runs.size(); ++k) {
        grads.push_back(per_run(runs[k]));
        perf[static_cast<Eigen::Index>(k)] = runs[k].performance;
    }
    return combine_gradients(grads, perf, tau);
}

/// Index of the run with the highest estimated return; ties keep the lowest k.
inline int best_run(const std::vector<ExploratoryRun>& runs) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(runs.size()); ++k)
        if (runs[static_cast<std::size_t>(k)].performance > runs[static_cast<std::size_t>(best)].performance) best = k;
    return best;
}

/// Concatenated final rollouts of every run: the Fisher/KL sample of the base update.
inline Vec final_state_distribution(const std::vector<ExploratoryRun>& runs, int num_states) {
    Vec d = Vec::Zero(num_states);
    double n = 0.0;
    for (const auto& r : runs)
        for (const auto& traj : r.final_batch)
            for (const auto& tr : traj.steps) d[tr.state] += 1.0, n += 1.0;
    return n > 0 ? Vec(d / n) : d;
}

/// KL-constrained step of a categorical policy along g.
inline TrustRegionResult policy_trust_region_step(const PolicyNet& net, const ParamVector& theta, const Vec& g,
                                                  double delta_kl, const Vec& state_weights,
                                                  const TrustRegionConfig& tr) {
    const auto rec = net.record(theta);
    const Mat old_log = rec.tape.value(rec.log_probs);
    auto fisher = [&](const Vec& v) { return fisher_vector_product(rec, state_weights, v); };
    auto kl = [&](const ParamVector& candidate) { return mean_kl(old_log, net.log_table(candidate), state_weights); };
    return trust_region_step(theta, g, delta_kl, fisher, kl, {tr.cg_iters, tr.damping, tr.backtracks});
}

inline TrustRegionResult policy_trust_region_step(const GridContext& ctx, const ParamVector& theta, const Vec& g,
                                                  double delta_kl, const Vec& state_weights,
                                                  const TrustRegionConfig& tr) {
    return policy_trust_region_step(ctx.policy_net(), theta, g, delta_kl, state_weights, tr);
}

struct BaseUpdateContext {
    int iteration = 0;
    const ParamVector* theta = nullptr;
    SampleCounter* counter = nullptr;
    bool positive_reward_seen = false;
};

/// Optional replacements for pieces of the base update (ablations).
struct IrpoHooks {
    std::function<Vec(const ExploratoryRun&)> per_run_gradient;  // default: backprop_through_updates
    std::function<Vec(const IrpoGradient&, const BaseUpdateContext&)> post_process;
    std::uint64_t extra_samples_per_iteration = 0;  // worst-case cost of hook rollouts
};

struct IterationReport {
    int iteration = 0;
    const ParamVector* theta_before = nullptr;
    const std::vector<ExploratoryRun>* runs = nullptr;
    const IrpoGradient* gradient = nullptr;
    const Vec* applied_gradient = nullptr;
    const TrustRegionResult* step = nullptr;
};

using IterationObserver = std::function<void(const IterationReport&)>;

struct TrainResult {
    std::vector<MetricsRow> rows;
    ParamVector base;
    ParamVector output_policy;
    std::uint64_t samples = 0;
    int iterations = 0;
    std::vector<double> accepted_kl;
    int rejected_steps = 0;
    EvalResult final_eval;
    EvalResult final_base_eval;
};

/// Worst-case transitions consumed by one IRPO iteration.
inline std::uint64_t irpo_iteration_cost(const RunConfig& cfg, int horizon) {
    const auto k = static_cast<std::uint64_t>(cfg.irpo.K);
    const auto episodes = k * static_cast<std::uint64_t>(cfg.irpo.N * cfg.irpo.explore_episodes) +
                          k * static_cast<std::uint64_t>(cfg.irpo.final_episodes);
    return episodes * static_cast<std::uint64_t>(horizon);
}

/// Evaluation cadence shared by every learner.
class EvalSchedule {
public:
    explicit EvalSchedule(std::uint64_t interval) : interval_(interval) {}
    bool due(std::uint64_t samples) {
        if (interval_ == 0 || !started_ || samples >= last_ + interval_) {
            started_ = true;
            last_ = samples;
            return true;
        }
        return false;
    }

private:
    std::uint64_t interval_;
    bool started_ = false;
    std::uint64_t last_ = 0;
};

inline TrainResult train_irpo(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {},
                              const IrpoHooks& hooks = {}, const IterationObserver& observer = {}) {
    const int K = ctx.intrinsic.count();
    if (K < 1) throw ConfigError("irpo needs at least one intrinsic reward");
    if (cfg.irpo.N < 1) throw ConfigError("irpo.N must be >= 1");
    const auto clock_start = std::chrono::steady_clock::now();
    const auto net = ctx.policy_net();

    Rng init_rng = make_rng(cfg.seed, kStreamInit);
    ParamVector theta = init_actor(ctx.actor, init_rng);
    std::vector<CriticPair> critics;
    std::vector<Rng> explore_rngs;
    for (int k = 0; k < K; ++k) {
        critics.push_back(init_critic_pair(ctx.critic, init_rng));
        explore_rngs.push_back(make_rng(cfg.seed, kStreamExplore, static_cast<std::uint64_t>(k)));
    }
    Rng eval_rng = make_rng(cfg.seed, kStreamEval);
    EvalSchedule schedule(cfg.eval.interval);

    RunConfig run_cfg = cfg;
    run_cfg.irpo.K = K;
    const std::uint64_t cost = irpo_iteration_cost(run_cfg, ctx.grid.horizon) + hooks.extra_samples_per_iteration;

    TrainResult result;
    result.base = theta;
    result.output_policy = theta;
    SampleCounter counter;
    bool positive_seen = false;
    EvalResult last_eval;
    EvalResult last_base_eval;

    while (counter.used + cost <= cfg.budget) {
        const int iteration = result.iterations + 1;
        const double tau = anneal_tau(static_cast<double>(counter.used), static_cast<double>(cfg.budget),
                                      cfg.irpo.tau_floor, cfg.irpo.tau_anneal_fraction);

        std::vector<ExploratoryRun> runs;
        runs.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            runs.push_back(run_exploratory(ctx, cfg, theta, k, critics[static_cast<std::size_t>(k)],
                                           explore_rngs[static_cast<std::size_t>(k)], counter));
        for (const auto& r : runs)
            for (const auto& traj : r.final_batch) positive_seen = positive_seen || traj.success();

        const IrpoGradient g =
            hooks.per_run_gradient ? irpo_gradient(runs, tau, hooks.per_run_gradient) : irpo_gradient(runs, tau);
        Vec applied = g.vector;
        if (hooks.post_process) applied = hooks.post_process(g, {iteration, &theta, &counter, positive_seen});
        require_finite(applied, "IRPO gradient at iteration " + std::to_string(iteration));

        TrustRegionResult step;
        if (cfg.irpo.base_update == BaseUpdate::trust_region) {
            step = policy_trust_region_step(ctx, theta, applied, cfg.irpo.delta_kl,
                                            final_state_distribution(runs, ctx.num_states()), cfg.trust_region);
        } else {
            step.params = theta + cfg.irpo.base_lr * applied;
            step.accepted = true;
            step.kl = mean_kl(net.log_table(theta), net.log_table(step.params),
                              final_state_distribution(runs, ctx.num_states()));
        }
        if (!step.warning.empty()) std::cerr << "[iteration " << iteration << "] " << step.warning << '\n';
        if (step.accepted) result.accepted_kl.push_back(step.kl);
        else ++result.rejected_steps;

        if (observer) observer({iteration, &theta, &runs, &g, &applied, &step});

        theta = step.params;
        const int best = best_run(runs);
        result.output_policy = runs[static_cast<std::size_t>(best)].final_params();
        result.iterations = iteration;

        if (schedule.due(counter.used)) {
            last_eval = evaluate(net.table(result.output_policy), ctx.grid, cfg.eval.episodes, eval_rng);
            last_base_eval = evaluate(net.table(theta), ctx.grid, cfg.eval.episodes, eval_rng);
        }

        MetricsRow row;
        row.samples = counter.used;
        row.iteration = iteration;
        row.eval_return = last_eval.mean_return;
        row.success = last_eval.success_rate;
        row.kl_step = step.kl;
        row.tau = tau;
        row.omega.assign(g.weights.data(), g.weights.data() + g.weights.size());
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        result.rows.push_back(row);
        if (sinks.metrics) sinks.metrics(row);
        if (sinks.base_metrics) {
            MetricsRow base_row = row;
            base_row.eval_return = last_base_eval.mean_return;
            base_row.success = last_base_eval.success_rate;
            sinks.base_metrics(base_row);
        }
        if (sinks.params) sinks.params(iteration, counter.used, theta, result.output_policy);
    }

    result.base = theta;
    result.samples = counter.used;
    if (result.iterations > 0) {
        result.final_eval = evaluate(net.table(result.output_policy), ctx.grid, cfg.eval.episodes, eval_rng);
        result.final_base_eval = evaluate(net.table(theta), ctx.grid, cfg.eval.episodes, eval_rng);
    }
    return result;
}

}  // namespace irpo
