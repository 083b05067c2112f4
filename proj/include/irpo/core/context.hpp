#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "irpo/config.hpp"
#include "irpo/core/policy.hpp"
#include "irpo/critic/critic.hpp"
#include "irpo/envs/layouts.hpp"
#include "irpo/intrinsic/rewards.hpp"

namespace irpo {

/// Everything a grid learner shares across iterations: the environment, the
/// intrinsic rewards and the state features both networks consume.
struct GridContext {
    GridSpec grid;
    IntrinsicRewardSet intrinsic;
    Mat features;
    MlpSpec actor;
    MlpSpec critic;

    PolicyNet policy_net() const { return PolicyNet{actor, &features}; }
    int num_states() const { return grid.num_states(); }
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Resolves layout defaults (horizon, discount, K) into the config.
inline GridSpec load_environment(RunConfig& cfg) {
    const BuiltinLayout* builtin = nullptr;
    for (const auto& l : kBuiltinLayouts)
        if (l.name == cfg.env.name) builtin = &l;
    if (cfg.env.map.empty() && builtin == nullptr)
        throw ConfigError("env.map is required for environment '" + cfg.env.name + "'");
    if (cfg.env.horizon <= 0) cfg.env.horizon = builtin ? builtin->horizon : 100;
    if (cfg.env.gamma < 0.0) cfg.env.gamma = builtin ? builtin->gamma : 0.99;
    if (cfg.irpo.K <= 0) cfg.irpo.K = builtin ? builtin->subpolicies : 4;
    const std::string text = cfg.env.map.empty() ? std::string(builtin->text) : read_text_file(cfg.env.map);
    return load_grid(text, cfg.env.horizon, cfg.env.gamma, cfg.env.name);
}

inline IntrinsicRewardSet build_intrinsic(const RunConfig& cfg, const GridSpec& grid, int k) {
    if (k == 0) return IntrinsicRewardSet::empty(grid.num_states());
    return cfg.intrinsic == IntrinsicKind::laplacian ? build_laplacian_rewards(grid, k)
                                                     : build_random_rewards(grid, k, cfg.intrinsic_seed);
}

inline GridContext make_context(GridSpec grid, IntrinsicRewardSet intrinsic, const RunConfig& cfg) {
    GridContext ctx;
    ctx.features = state_features(grid);
    ctx.grid = std::move(grid);
    ctx.intrinsic = std::move(intrinsic);
    ctx.actor = actor_spec();
    ctx.critic = critic_spec(static_cast<std::size_t>(cfg.critic.hidden));
    return ctx;
}

inline GridContext make_context(RunConfig& cfg) {
    GridSpec grid = load_environment(cfg);
    IntrinsicRewardSet intrinsic = build_intrinsic(cfg, grid, cfg.irpo.K);
    return make_context(std::move(grid), std::move(intrinsic), cfg);
}

// RNG stream tags; each learner component draws from its own stream.
enum RngStream : std::uint64_t {
    kStreamInit = 1,
    kStreamExplore = 2,
    kStreamBase = 3,
    kStreamEval = 4,
    kStreamPretrain = 5,
};

}  // namespace irpo
