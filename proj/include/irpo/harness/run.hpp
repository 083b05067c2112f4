#pragma once

// Runs one (config, seed) training job and persists everything needed to
// reproduce or replay it: the resolved config, metrics, checkpoints and the
// final policy.

#include <filesystem>
#include <optional>

#include "irpo/baselines/blend.hpp"
#include "irpo/baselines/hrl.hpp"
#include "irpo/baselines/importance.hpp"
#include "irpo/baselines/reward_sum.hpp"
#include "irpo/harness/checkpoint.hpp"
#include "irpo/harness/config_io.hpp"

namespace irpo {

inline constexpr const char* kPolicyFormat = "irpo-policy-1";

/// Dispatches on cfg.agent. `options` receives the option policy for hrl.
inline TrainResult train_agent(const RunConfig& cfg, const GridContext& ctx, const TrainSinks& sinks = {},
                               OptionPolicy* options = nullptr) {
    switch (cfg.agent) {
    case AgentKind::irpo: return train_irpo(cfg, ctx, sinks);
    case AgentKind::vanilla: return vanilla_pg_train(cfg, ctx, sinks);
    case AgentKind::is_irpo: return is_irpo_train(cfg, ctx, sinks);
    case AgentKind::reward_sum: return reward_sum_train(cfg, ctx, sinks);
    case AgentKind::hrl: return hrl_train(cfg, ctx, sinks, options);
    case AgentKind::blend: return blended_train(cfg, ctx, blend_schedule(cfg.blend), sinks);
    }
    throw ConfigError("unknown agent");
}

inline nlohmann::json matrix_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json_vector(m.row(i).transpose()));
    return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ConfigError("policy: empty matrix");
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError("policy: ragged matrix");
        for (std::size_t a = 0; a < rows[i].size(); ++a)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = rows[i][a];
    }
    return m;
}

/// Saved policy: the resolved config (YAML text) plus either flat actor
/// parameters or an option policy.
inline nlohmann::json policy_json(const RunConfig& cfg, const ParamVector& params, const OptionPolicy* options) {
    nlohmann::json j{{"format", kPolicyFormat}, {"agent", agent_name(cfg.agent)}, {"config", emit_config(cfg)}};
    if (options) {
        j["kind"] = "options";
        j["params"] = to_json_vector(options->high_level);
        j["max_steps"] = options->max_steps;
        j["stall_steps"] = options->stall_steps;
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& t : options->subpolicies) subs.push_back(matrix_json(t));
        j["subpolicies"] = subs;
    } else {
        j["kind"] = "flat";
        j["params"] = to_json_vector(params);
    }
    return j;
}

struct SavedPolicy {
    RunConfig config;
    ParamVector params;
    std::optional<OptionPolicy> options;
};

inline SavedPolicy saved_policy_from_json(const nlohmann::json& j, const std::string& source) {
    try {
        if (j.at("format").get<std::string>() != kPolicyFormat)
            throw ConfigError(source + ": unsupported policy format '" + j.at("format").get<std::string>() + "'");
        SavedPolicy p;
        p.config = parse_config(j.at("config").get<std::string>(), source + "#config");
        p.params = from_json_vector(j.at("params"));
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "options") {
            OptionPolicy o;
            o.high_level = p.params;
            o.max_steps = j.at("max_steps").get<int>();
            o.stall_steps = j.at("stall_steps").get<int>();
            for (const auto& t : j.at("subpolicies")) o.subpolicies.push_back(matrix_from_json(t));
            o.high_spec = actor_spec(64, static_cast<std::size_t>(o.num_options()));
            p.options = std::move(o);
        } else if (kind != "flat") {
            throw ConfigError(source + ": unknown policy kind '" + kind + "'");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(source + ": malformed policy: " + e.what());
    }
}

inline SavedPolicy load_policy(const std::string& path) { return saved_policy_from_json(read_json(path), path); }

/// Greedy replay of a saved policy in its own environment.
inline EvalResult evaluate_saved(const SavedPolicy& p, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw ConfigError("eval episodes must be >= 1");
    RunConfig cfg = p.config;
    const GridContext ctx = make_context(cfg);
    Rng rng = make_rng(seed, kStreamEval);
    if (p.options) {
        for (const auto& t : p.options->subpolicies)
            if (t.rows() != ctx.num_states() || t.cols() != kNumActions)
                throw ConfigError("policy: subpolicy shape does not match the environment");
        if (static_cast<int>(p.options->subpolicies.size()) != ctx.intrinsic.count())
            throw ConfigError("policy: subpolicy count does not match the intrinsic rewards");
        if (p.params.size() != static_cast<Eigen::Index>(p.options->high_spec.param_count()))
            throw ConfigError("policy: parameter count does not match the high-level network");
        const PolicyNet high{p.options->high_spec, &ctx.features};
        return evaluate_options(ctx, *p.options, high.table(p.params), episodes, rng);
    }
    if (p.params.size() != static_cast<Eigen::Index>(ctx.actor.param_count()))
        throw ConfigError("policy: parameter count does not match the actor network");
    return evaluate(ctx.policy_net().table(p.params), ctx.grid, episodes, rng);
}

struct RunSummary {
    TrainResult result;
    std::filesystem::path dir;
};

/// Trains cfg.agent and writes into `dir`: config.yaml (the resolved config),
/// metrics.csv, base_metrics.csv (irpo-family agents), checkpoints/ and
/// policy.json.
inline RunSummary run_training(RunConfig cfg, const std::filesystem::path& dir) {
    validate_config(cfg);
    const GridContext ctx = make_context(cfg);  // resolves layout defaults first
    std::filesystem::create_directories(dir);
    {
        std::ofstream echo(dir / "config.yaml");
        if (!echo) throw ConfigError("cannot write " + (dir / "config.yaml").string());
        echo << emit_config(cfg);
    }
    MetricsWriter metrics((dir / "metrics.csv").string());
    std::optional<MetricsWriter> base_metrics;
    const bool has_base = cfg.agent == AgentKind::irpo || cfg.agent == AgentKind::is_irpo ||
                          cfg.agent == AgentKind::blend;
    if (has_base) base_metrics.emplace((dir / "base_metrics.csv").string());
    CheckpointWriter checkpoints(dir / "checkpoints");

    TrainSinks sinks;
    sinks.metrics = [&](const MetricsRow& r) { metrics.write(r); };
    if (has_base) sinks.base_metrics = [&](const MetricsRow& r) { base_metrics->write(r); };
    sinks.params = [&](int iteration, std::uint64_t samples, const ParamVector& base, const ParamVector& output) {
        checkpoints.offer({agent_name(cfg.agent), cfg.seed, iteration, samples, base, output});
    };
    OptionPolicy options;
    RunSummary summary{train_agent(cfg, ctx, sinks, &options), dir};
    const bool hrl = cfg.agent == AgentKind::hrl;
    write_json(dir / "policy.json", policy_json(cfg, summary.result.output_policy, hrl ? &options : nullptr));
    return summary;
}

}  // namespace irpo
