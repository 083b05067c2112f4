#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "irpo/envs/grid.hpp"
#include "irpo/intrinsic/reward_set.hpp"
#include "irpo/numerics/eig.hpp"
#include "irpo/numerics/mlp.hpp"

namespace irpo {

/// Combinatorial Laplacian D - A of the 4-connected free-cell graph.
inline Mat grid_laplacian(const GridSpec& spec) {
    const int n = spec.num_states();
    Mat lap = Mat::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (int t : spec.neighbours(s)) {
            lap(s, t) = -1.0;
            lap(s, s) += 1.0;
        }
    }
    return lap;
}

/// Eigenvectors 2..K+1 of the grid Laplacian, each scaled to max |v| = 1 and
/// signed so the start cell is non-positive.
inline IntrinsicRewardSet build_laplacian_rewards(const GridSpec& spec, int k) {
    const int n = spec.num_states();
    if (k < 0 || k > n - 1)
        throw ConfigError("laplacian rewards: K must lie in [0, " + std::to_string(n - 1) + "], got " +
                          std::to_string(k));
    const auto comps = spec.components();
    if (comps.size() > 1) {
        std::ostringstream msg;
        msg << "laplacian rewards: free cells form " << comps.size() << " disconnected components:";
        for (std::size_t c = 0; c < comps.size(); ++c) {
            const Cell first = spec.cell_of_state(comps[c].front());
            msg << "\n  component " << c << ": " << comps[c].size() << " cells, e.g. (" << first.x << ", "
                << first.y << ")";
        }
        throw ConfigError(msg.str());
    }

    const EigenSystem eig = sym_eig(grid_laplacian(spec));
    IntrinsicRewardSet set;
    set.provenance = RewardProvenance::laplacian;
    set.values = Mat(n, k);
    set.raw = Mat(n, k);
    set.eigenvalues = Vec(k);
    const int start = spec.start_state();
    for (int i = 0; i < k; ++i) {
        Vec v = eig.vectors.col(i + 1);
        if (v[start] > 0.0) v = -v;
        set.raw.col(i) = v;
        set.eigenvalues[i] = eig.values[i + 1];
        set.values.col(i) = v / v.cwiseAbs().maxCoeff();
    }
    return set;
}

/// Normalised observation of every free cell, one row per state index.
inline Mat state_features(const GridSpec& spec) {
    Mat x(spec.num_states(), static_cast<Eigen::Index>(kObsDim));
    for (int s = 0; s < spec.num_states(); ++s) {
        const Observation o = spec.observe(spec.cell_of_state(s));
        for (std::size_t d = 0; d < kObsDim; ++d) x(s, static_cast<Eigen::Index>(d)) = o[d];
    }
    return x;
}

struct RandomRewardOptions {
    bool zero_weights = false;
};

/// Frozen random tanh network (64, 64) mapping observations to K channels,
/// each channel min-max rescaled to [-1, 1] over the free cells.
inline IntrinsicRewardSet build_random_rewards(const GridSpec& spec, int k, std::uint64_t seed,
                                               RandomRewardOptions opts = {}) {
    if (k < 1) throw ConfigError("random rewards: K must be >= 1");
    const MlpSpec net{kObsDim, {64, 64}, static_cast<std::size_t>(k)};
    Rng rng = make_rng(seed, 0x7261'6e64);
    ParamVector params = init_mlp(net, rng);
    if (opts.zero_weights) params.setZero();
    const Mat raw = mlp_forward(net, params, state_features(spec)).value();

    IntrinsicRewardSet set;
    set.provenance = RewardProvenance::random_network;
    set.values = Mat(raw.rows(), k);
    for (int c = 0; c < k; ++c) {
        const double lo = raw.col(c).minCoeff();
        const double hi = raw.col(c).maxCoeff();
        if (!(hi - lo > 1e-12)) throw ConfigError("constant reward channel " + std::to_string(c));
        set.values.col(c) = ((raw.col(c).array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
    }
    return set;
}

/// CSV with header `x,y,k,value`, one row per (channel, free cell).
inline std::string dump_reward_maps(const IntrinsicRewardSet& set, const GridSpec& spec) {
    expects(set.values.rows() == spec.num_states(), "dump_reward_maps: reward set does not match grid");
    std::ostringstream out;
    out.precision(17);
    out << "x,y,k,value\n";
    for (int k = 0; k < set.count(); ++k)
        for (int s = 0; s < spec.num_states(); ++s) {
            const Cell c = spec.cell_of_state(s);
            out << c.x << ',' << c.y << ',' << k << ',' << set.value(s, k) << '\n';
        }
    return out.str();
}

}  // namespace irpo
