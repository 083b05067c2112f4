#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "irpo/envs/grid.hpp"
#include "irpo/intrinsic/reward_set.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

struct Transition {
    Observation obs{};
    int state = 0;
    int action = 0;
    double reward = 0.0;
    std::vector<double> intrinsic;  // one entry per intrinsic reward
    double log_prob = 0.0;
    bool terminal = false;   // episode ended here (goal or horizon)
    bool truncated = false;  // ended by the horizon without reaching the goal
    Observation next_obs{};
    int next_state = 0;
    int duration = 1;  // primitive steps covered (options span several)
};

struct Trajectory {
    std::vector<Transition> steps;

    std::size_t size() const { return steps.size(); }
    bool success() const { return !steps.empty() && steps.back().reward > 0.0; }

    double discounted_return(double gamma) const {
        double g = 0.0;
        for (std::size_t t = steps.size(); t-- > 0;) g = steps[t].reward + gamma * g;
        return g;
    }
};

using Batch = std::vector<Trajectory>;

inline std::size_t batch_samples(const Batch& batch) {
    std::size_t n = 0;
    for (const auto& tr : batch) n += tr.size();
    return n;
}

inline double mean_discounted_return(const Batch& batch, double gamma) {
    if (batch.empty()) return 0.0;
    double s = 0.0;
    for (const auto& tr : batch) s += tr.discounted_return(gamma);
    return s / static_cast<double>(batch.size());
}

/// Cumulative environment transitions drawn so far.
struct SampleCounter {
    std::uint64_t used = 0;
};

/// Action probabilities for every state, one row per state index.
using PolicyTable = Mat;

inline int sample_action(const PolicyTable& policy, int state, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    const auto row = policy.row(state);
    for (int a = 0; a + 1 < row.size(); ++a) {
        acc += row(a);
        if (u < acc) return a;
    }
    return static_cast<int>(row.size()) - 1;
}

/// One episode under a stochastic tabulated policy. Every transition carries
/// all K intrinsic rewards (potential differences) of the supplied set.
inline Trajectory rollout(const GridSpec& spec, const PolicyTable& policy, const IntrinsicRewardSet& intrinsic,
                          Rng& rng, SampleCounter& counter) {
    expects(policy.rows() == spec.num_states() && policy.cols() == kNumActions,
            "rollout: policy table must have one row of 4 action probabilities per state");
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(std::min(spec.horizon, 512)));
    GridState state = reset(spec);
    while (!state.done) {
        Transition tr;
        tr.state = spec.state_of(state.agent);
        tr.obs = spec.observe(state.agent);
        tr.action = sample_action(policy, tr.state, rng);
        tr.log_prob = std::log(policy(tr.state, tr.action));
        const StepResult r = step(spec, state, static_cast<Action>(tr.action));
        tr.next_state = spec.state_of(r.next.agent);
        tr.next_obs = spec.observe(r.next.agent);
        tr.reward = r.reward;
        tr.terminal = r.terminal;
        tr.truncated = r.terminal && !r.reached_goal;
        tr.intrinsic = intrinsic.transition_rewards(tr.state, tr.next_state);
        traj.steps.push_back(std::move(tr));
        state = r.next;
        ++counter.used;
    }
    return traj;
}

inline Batch collect(const GridSpec& spec, const PolicyTable& policy, const IntrinsicRewardSet& intrinsic,
                     int episodes, Rng& rng, SampleCounter& counter) {
    Batch batch;
    batch.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) batch.push_back(rollout(spec, policy, intrinsic, rng, counter));
    return batch;
}

}  // namespace irpo
