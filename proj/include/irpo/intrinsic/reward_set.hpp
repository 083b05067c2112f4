#pragma once

#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

enum class RewardProvenance { none, laplacian, random_network };

/// K state potentials tabulated over free-cell state indices, each in [-1, 1].
/// A transition s -> s' earns value(s', k) - value(s, k) on channel k.
struct IntrinsicRewardSet {
    Mat values;  // num_states x K
    RewardProvenance provenance = RewardProvenance::none;
    Vec eigenvalues;  // Laplacian only: eigenvalue of each channel
    Mat raw;          // Laplacian only: unit-norm eigenvectors before rescaling

    static IntrinsicRewardSet empty(int num_states) {
        IntrinsicRewardSet s;
        s.values = Mat::Zero(num_states, 0);
        return s;
    }

    int count() const { return static_cast<int>(values.cols()); }
    double value(int state, int k) const { return values(state, k); }

    double transition_reward(int k, int state, int next_state) const {
        return values(next_state, k) - values(state, k);
    }

    std::vector<double> transition_rewards(int state, int next_state) const {
        std::vector<double> r(static_cast<std::size_t>(count()));
        for (int k = 0; k < count(); ++k) r[static_cast<std::size_t>(k)] = transition_reward(k, state, next_state);
        return r;
    }
};

}  // namespace irpo
