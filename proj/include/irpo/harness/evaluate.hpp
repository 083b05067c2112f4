#pragma once

#include <random>
#include <vector>

#include "irpo/envs/rollout.hpp"

namespace irpo {

struct EvalResult {
    double mean_return = 0.0;
    double success_rate = 0.0;
};

inline int greedy_action(const PolicyTable& policy, int state, Rng& rng) {
    const auto row = policy.row(state);
    const double best = row.maxCoeff();
    std::vector<int> ties;
    for (int a = 0; a < row.size(); ++a)
        if (row(a) == best) ties.push_back(a);
    if (ties.size() == 1) return ties.front();
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

/// Greedy (argmax) episodes; returns the mean discounted return and the
/// fraction of episodes that reach the goal within the horizon.
inline EvalResult evaluate(const PolicyTable& policy, const GridSpec& spec, int episodes, Rng& rng) {
    expects(episodes >= 1, "evaluate: episodes must be >= 1");
    EvalResult r;
    for (int e = 0; e < episodes; ++e) {
        GridState s = reset(spec);
        double discount = 1.0;
        while (!s.done) {
            const StepResult out = step(spec, s, static_cast<Action>(greedy_action(policy, spec.state_of(s.agent), rng)));
            r.mean_return += discount * out.reward;
            if (out.reached_goal) r.success_rate += 1.0;
            discount *= spec.gamma;
            s = out.next;
        }
    }
    r.mean_return /= episodes;
    r.success_rate /= episodes;
    return r;
}

}  // namespace irpo
