#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "irpo/envs/rollout.hpp"
#include "irpo/numerics/mlp.hpp"

namespace irpo {

inline MlpSpec actor_spec(std::size_t hidden = 64, std::size_t actions = kNumActions) {
    return MlpSpec{kObsDim, {hidden, hidden}, actions};
}

inline ParamVector init_actor(const MlpSpec& spec, Rng& rng) { return init_mlp(spec, rng, 1.0, 0.01); }

/// Categorical policy network evaluated on every state at once.
struct PolicyNet {
    MlpSpec spec;
    const Mat* features = nullptr;  // num_states x obs_dim

    struct Recorded {
        GradTape tape;
        NodeId logits;
        NodeId log_probs;
    };

    Recorded record(const ParamVector& params) const {
        auto fwd = mlp_forward(spec, params, *features);
        const NodeId lp = fwd.tape.log_softmax(fwd.output);
        return {std::move(fwd.tape), fwd.output, lp};
    }

    PolicyTable table(const ParamVector& params) const {
        auto rec = record(params);
        return rec.tape.value(rec.log_probs).array().exp().matrix();
    }

    Mat log_table(const ParamVector& params) const {
        auto rec = record(params);
        return rec.tape.value(rec.log_probs);
    }
};

/// S[s, a] = (1/B) sum of weights over transitions taking a in s.
inline Mat transition_weights(const Batch& batch, const std::vector<double>& per_transition, int num_states,
                              int num_actions = kNumActions) {
    Mat w = Mat::Zero(num_states, num_actions);
    const std::size_t n = batch_samples(batch);
    expects(per_transition.size() == n, "one weight per transition required");
    if (n == 0) return w;
    const double inv_b = 1.0 / static_cast<double>(n);
    std::size_t i = 0;
    for (const auto& traj : batch)
        for (const auto& tr : traj.steps) w(tr.state, tr.action) += per_transition[i++] * inv_b;
    return w;
}

/// Surrogate L(theta) = sum_{s,a} S[s,a] log pi_theta(a | s) recorded on a
/// tape; its gradient is the sampled policy gradient and its Hessian is the
/// curvature of the update performed from the same samples.
struct Surrogate {
    GradTape tape;
    NodeId logits;
    NodeId objective;
};

inline Surrogate record_surrogate(const PolicyNet& net, const ParamVector& params, const Mat& weights) {
    auto rec = net.record(params);
    const NodeId obj = rec.tape.weighted_sum(rec.log_probs, weights);
    return {std::move(rec.tape), rec.logits, obj};
}

inline ParamVector policy_gradient(const PolicyNet& net, const ParamVector& params, const Batch& batch,
                                   const std::vector<double>& adv) {
    const auto s = record_surrogate(net, params, transition_weights(batch, adv, static_cast<int>(net.features->rows()),
                                                                    static_cast<int>(net.spec.output_dim)));
    return grad(s.tape, s.objective);
}

/// Empirical state-visitation distribution of a batch.
inline Vec state_distribution(const Batch& batch, int num_states) {
    Vec d = Vec::Zero(num_states);
    const std::size_t n = batch_samples(batch);
    if (n == 0) return d;
    for (const auto& traj : batch)
        for (const auto& tr : traj.steps) d[tr.state] += 1.0;
    return d / static_cast<double>(n);
}

/// Mean KL(pi_old || pi_new) under the state distribution.
inline double mean_kl(const Mat& old_log_probs, const Mat& new_log_probs, const Vec& state_weights) {
    const Mat p = old_log_probs.array().exp().matrix();
    const Vec per_state = (p.array() * (old_log_probs - new_log_probs).array()).rowwise().sum().matrix();
    return state_weights.dot(per_state);
}

/// Fisher information of the categorical policy applied to v:
/// sum_s w_s J_s^T (diag p_s - p_s p_s^T) J_s v, J_s the logit Jacobian.
inline Vec fisher_vector_product(const PolicyNet::Recorded& rec, const Vec& state_weights, const Vec& v) {
    const Mat z_dot = jvp(rec.tape, rec.logits, v);
    const Mat p = rec.tape.value(rec.log_probs).array().exp().matrix();
    const Vec inner = (p.array() * z_dot.array()).rowwise().sum().matrix();
    Mat u = (p.array() * (z_dot.colwise() - inner).array()).matrix();
    u.array().colwise() *= state_weights.array();
    return grad(rec.tape, rec.logits, u);
}

}  // namespace irpo
