#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "irpo/config.hpp"
#include "irpo/envs/rollout.hpp"
#include "irpo/errors.hpp"
#include "irpo/numerics/adam.hpp"
#include "irpo/numerics/mlp.hpp"

namespace irpo {

inline MlpSpec critic_spec(std::size_t hidden = 128) { return MlpSpec{kObsDim, {hidden, hidden}, 1}; }

/// Value network parameters with the optimizer state that travels with them.
struct Critic {
    ParamVector params;
    AdamState adam;
};

/// Intrinsic and extrinsic value networks owned by one exploratory policy.
struct CriticPair {
    Critic intrinsic;
    Critic extrinsic;
};

inline ParamVector init_critic(const MlpSpec& spec, Rng& rng) { return init_mlp(spec, rng, 1.0, 0.01); }

inline CriticPair init_critic_pair(const MlpSpec& spec, Rng& rng) {
    CriticPair p;
    p.intrinsic.params = init_critic(spec, rng);
    p.extrinsic.params = init_critic(spec, rng);
    return p;
}

struct CriticOptions {
    double gamma = 0.99;
    double lambda = 0.95;
    double lr = 1e-3;
    int epochs = 3;
    CriticOptimizer optimizer = CriticOptimizer::adam;
};

/// Reward seen by a learner on one transition.
using RewardChannel = std::function<double(const Transition&)>;

inline RewardChannel extrinsic_channel() {
    return [](const Transition& t) { return t.reward; };
}

inline RewardChannel intrinsic_channel(int k) {
    return [k](const Transition& t) { return t.intrinsic[static_cast<std::size_t>(k)]; };
}

/// V(s) for every state index.
inline Vec value_table(const MlpSpec& spec, const ParamVector& params, const Mat& features) {
    return mlp_forward(spec, params, features).value().col(0);
}

inline void check_discounting(double gamma, double lambda) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
}

/// Backward recursion  G_t = r_t + gamma ((1 - lambda) V_{t+1} + lambda G_{t+1}),
/// with G_T = V_T. `values` has one more entry than `rewards`; the last is
/// the bootstrap value of the final next-state (0 after reaching the goal).
inline std::vector<double> lambda_returns(std::span<const double> rewards, std::span<const double> values,
                                          double gamma, double lambda) {
    check_discounting(gamma, lambda);
    if (values.size() != rewards.size() + 1)
        throw ConfigError("lambda_returns: need one value per state plus the bootstrap value");
    std::vector<double> out(rewards.size());
    double next = values.back();
    for (std::size_t t = rewards.size(); t-- > 0;) {
        next = rewards[t] + gamma * ((1.0 - lambda) * values[t + 1] + lambda * next);
        out[t] = next;
    }
    return out;
}

/// Per-state values along one trajectory plus its bootstrap value.
inline std::vector<double> trajectory_values(const Trajectory& traj, const Vec& table) {
    std::vector<double> v;
    v.reserve(traj.size() + 1);
    for (const auto& tr : traj.steps) v.push_back(table[tr.state]);
    const auto& last = traj.steps.back();
    v.push_back(last.truncated ? table[last.next_state] : 0.0);
    return v;
}

inline std::vector<double> trajectory_rewards(const Trajectory& traj, const RewardChannel& channel) {
    std::vector<double> r;
    r.reserve(traj.size());
    for (const auto& tr : traj.steps) r.push_back(channel(tr));
    return r;
}

/// Regression batch: visited states and their fixed targets.
struct CriticBatch {
    std::vector<int> states;
    std::vector<double> targets;
};

inline CriticBatch lambda_return_batch(const Batch& batch, const Vec& table, const RewardChannel& channel,
                                       double gamma, double lambda) {
    CriticBatch out;
    for (const auto& traj : batch) {
        if (traj.steps.empty()) continue;
        const auto targets =
            lambda_returns(trajectory_rewards(traj, channel), trajectory_values(traj, table), gamma, lambda);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            out.states.push_back(traj.steps[t].state);
            out.targets.push_back(targets[t]);
        }
    }
    return out;
}

/// Mean squared error of the critic over the batch.
inline double critic_loss(const MlpSpec& spec, const ParamVector& params, const Mat& features,
                          const CriticBatch& batch) {
    const Vec v = value_table(spec, params, features);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        const double e = v[batch.states[i]] - batch.targets[i];
        loss += e * e;
    }
    return batch.states.empty() ? 0.0 : loss / static_cast<double>(batch.states.size());
}

/// Gradient of the mean squared error with targets held constant.
/// Transitions sharing a state are folded into a single network row.
inline Vec critic_loss_gradient(const MlpSpec& spec, const ParamVector& params, const Mat& features,
                                const CriticBatch& batch) {
    auto fwd = mlp_forward(spec, params, features);
    const Vec v = fwd.value().col(0);
    const double inv_b = 1.0 / static_cast<double>(batch.states.size());
    Mat seed = Mat::Zero(v.size(), 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        const double e = v[batch.states[i]] - batch.targets[i];
        seed(batch.states[i], 0) += 2.0 * e * inv_b;
        loss += e * e * inv_b;
    }
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "critic loss is not finite (batch of " << batch.states.size() << " targets, max |param| "
            << params.cwiseAbs().maxCoeff() << ")";
        throw NumericalError(msg.str());
    }
    return grad(fwd.tape, fwd.output, seed);
}

/// One plain gradient step on the mean squared error.
inline ParamVector critic_update(const MlpSpec& spec, const ParamVector& params, const Mat& features,
                                 const CriticBatch& batch, double lr) {
    if (!(lr > 0.0)) throw ConfigError("critic learning rate must be positive");
    if (batch.states.empty()) return params;
    return params - lr * critic_loss_gradient(spec, params, features, batch);
}

inline ParamVector fit_critic(const MlpSpec& spec, ParamVector params, const Mat& features, const Batch& batch,
                              const RewardChannel& channel, double gamma, double lambda, double lr, int epochs) {
    // Targets are recomputed with the current critic before every epoch.
    for (int e = 0; e < epochs; ++e) {
        const Vec table = value_table(spec, params, features);
        params = critic_update(spec, params, features, lambda_return_batch(batch, table, channel, gamma, lambda), lr);
    }
    return params;
}

inline void fit_critic(const MlpSpec& spec, Critic& critic, const Mat& features, const Batch& batch,
                       const RewardChannel& channel, const CriticOptions& opts) {
    if (opts.optimizer == CriticOptimizer::sgd) {
        critic.params =
            fit_critic(spec, critic.params, features, batch, channel, opts.gamma, opts.lambda, opts.lr, opts.epochs);
        return;
    }
    if (!(opts.lr > 0.0)) throw ConfigError("critic learning rate must be positive");
    for (int e = 0; e < opts.epochs; ++e) {
        const Vec table = value_table(spec, critic.params, features);
        const auto targets = lambda_return_batch(batch, table, channel, opts.gamma, opts.lambda);
        if (targets.states.empty()) return;
        critic.params =
            adam_step(critic.params, critic_loss_gradient(spec, critic.params, features, targets), opts.lr, critic.adam);
    }
}

/// TD residuals r + gamma V(s') - V(s) for every transition, in batch order.
/// Goal transitions bootstrap with 0, horizon cut-offs with V(s').
inline std::vector<double> td_residuals(const Batch& batch, const Vec& table, const RewardChannel& channel,
                                        double gamma) {
    std::vector<double> adv;
    adv.reserve(batch_samples(batch));
    for (const auto& traj : batch)
        for (const auto& tr : traj.steps) {
            const double next = (tr.terminal && !tr.truncated) ? 0.0 : table[tr.next_state];
            adv.push_back(channel(tr) + gamma * next - table[tr.state]);
        }
    return adv;
}

/// Shifts to zero mean and scales to unit variance; a constant batch maps to zeros.
inline void normalize_advantages(std::vector<double>& adv) {
    if (adv.empty()) return;
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    const double sd = std::sqrt(var);
    for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
}

inline std::vector<double> advantages(const Batch& batch, const Vec& table, const RewardChannel& channel,
                                      double gamma, bool normalize = true) {
    auto adv = td_residuals(batch, table, channel, gamma);
    if (normalize) normalize_advantages(adv);
    return adv;
}

}  // namespace irpo

namespace irpo {

inline CriticOptions critic_options(const CriticConfig& c, double gamma, double lr) {
    return {gamma, c.lambda, lr, c.epochs, c.optimizer};
}

inline CriticOptions critic_options(const CriticConfig& c, double gamma) { return critic_options(c, gamma, c.lr); }

}  // namespace irpo
