#pragma once

// YAML run configuration: parsing with line-precise errors and an exact echo
// that parses back to the same RunConfig.

#include <yaml-cpp/yaml.h>

#include <array>
#include <fstream>
#include <set>
#include <string>
#include <utility>

#include "irpo/config.hpp"
#include "irpo/errors.hpp"

namespace irpo {

namespace detail {

inline std::string where(const std::string& source, const YAML::Mark& m) {
    if (m.line < 0) return source;
    return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

template <class T>
void read_scalar(const YAML::Node& node, const std::string& source, const std::string& key, T& out) {
    if (!node.IsScalar()) throw ConfigError(where(source, node.Mark()) + ": '" + key + "' must be a scalar");
    try {
        out = node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where(source, node.Mark()) + ": cannot read '" + key + "' from '" + node.Scalar() + "'");
    }
}

template <class E, std::size_t N>
void read_enum(const YAML::Node& node, const std::string& source, const std::string& key,
               const std::array<std::pair<const char*, E>, N>& names, E& out) {
    std::string text;
    read_scalar(node, source, key, text);
    for (const auto& [name, value] : names)
        if (text == name) {
            out = value;
            return;
        }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(where(source, node.Mark()) + ": unknown " + key + " '" + text + "' (expected one of " + allowed +
                      ")");
}

template <class E, std::size_t N>
const char* enum_name(const std::array<std::pair<const char*, E>, N>& names, E value) {
    for (const auto& [name, v] : names)
        if (v == value) return name;
    return "?";
}

/// Reads the keys of one mapping, rejecting unknown ones.
class Section {
public:
    Section(YAML::Node node, std::string source, std::string path)
        : node_(std::move(node)), source_(std::move(source)), path_(std::move(path)) {
        if (node_ && !node_.IsMap())
            throw ConfigError(where(source_, node_.Mark()) + ": '" + path_ + "' must be a mapping");
    }

    template <class T>
    Section& get(const char* key, T& out) {
        seen_.insert(key);
        if (node_ && node_[key]) read_scalar(node_[key], source_, qualified(key), out);
        return *this;
    }

    template <class E, std::size_t N>
    Section& get_enum(const char* key, const std::array<std::pair<const char*, E>, N>& names, E& out) {
        seen_.insert(key);
        if (node_ && node_[key]) read_enum(node_[key], source_, qualified(key), names, out);
        return *this;
    }

    Section child(const char* key) {
        seen_.insert(key);
        return Section(node_ ? node_[key] : YAML::Node(), source_, qualified(key));
    }

    void finish() const {
        if (!node_) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key))
                throw ConfigError(where(source_, kv.first.Mark()) + ": unknown key '" + qualified(key) + "'");
        }
    }

private:
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    YAML::Node node_;
    std::string source_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline constexpr std::array<std::pair<const char*, AgentKind>, 6> kAgentNames{{
    {"irpo", AgentKind::irpo},
    {"vanilla", AgentKind::vanilla},
    {"is-irpo", AgentKind::is_irpo},
    {"reward-sum", AgentKind::reward_sum},
    {"hrl", AgentKind::hrl},
    {"blend", AgentKind::blend},
}};
inline constexpr std::array<std::pair<const char*, IntrinsicKind>, 2> kIntrinsicNames{{
    {"laplacian", IntrinsicKind::laplacian},
    {"random", IntrinsicKind::random},
}};
inline constexpr std::array<std::pair<const char*, BaseUpdate>, 2> kBaseUpdateNames{{
    {"trust-region", BaseUpdate::trust_region},
    {"ascent", BaseUpdate::ascent},
}};
inline constexpr std::array<std::pair<const char*, BlendMode>, 4> kBlendNames{{
    {"constant", BlendMode::constant},
    {"abrupt", BlendMode::abrupt},
    {"exponential", BlendMode::exponential},
    {"linear", BlendMode::linear},
}};
inline constexpr std::array<std::pair<const char*, CriticOptimizer>, 2> kCriticOptimizerNames{{
    {"adam", CriticOptimizer::adam},
    {"sgd", CriticOptimizer::sgd},
}};

inline const char* agent_name(AgentKind a) { return detail::enum_name(kAgentNames, a); }

/// Parses an agent name as accepted by `train --agent`; blend-<mode> selects
/// the blend agent with that schedule.
inline void apply_agent_name(const std::string& name, RunConfig& cfg) {
    for (const auto& [n, kind] : kAgentNames)
        if (name == n) {
            cfg.agent = kind;
            return;
        }
    if (name.rfind("blend-", 0) == 0) {
        const std::string mode = name.substr(6);
        for (const auto& [n, m] : kBlendNames)
            if (mode == n) {
                cfg.agent = AgentKind::blend;
                cfg.blend.mode = m;
                return;
            }
    }
    throw ConfigError("unknown agent '" + name +
                      "' (expected irpo, vanilla, is-irpo, reward-sum, hrl or blend-{constant,abrupt,exponential,linear})");
}

inline void validate_config(const RunConfig& c) {
    std::vector<std::string> problems;
    if (c.irpo.N < 1) problems.push_back("irpo.N must be >= 1");
    if (c.irpo.K < 0) problems.push_back("irpo.K must be >= 0");
    if (!(c.irpo.eta >= 0.0)) problems.push_back("irpo.eta must be >= 0");
    if (!(c.irpo.delta_kl > 0.0)) problems.push_back("irpo.delta_kl must be positive");
    if (!(c.irpo.tau_floor > 0.0 && c.irpo.tau_floor <= 1.0)) problems.push_back("irpo.tau_floor must lie in (0, 1]");
    if (!(c.irpo.tau_anneal_fraction >= 0.0)) problems.push_back("irpo.tau_anneal_fraction must be >= 0");
    if (c.irpo.explore_episodes < 1) problems.push_back("irpo.explore_episodes must be >= 1");
    if (c.irpo.final_episodes < 1) problems.push_back("irpo.final_episodes must be >= 1");
    if (!(c.critic.lambda >= 0.0 && c.critic.lambda <= 1.0)) problems.push_back("critic.lambda must lie in [0, 1]");
    if (!(c.critic.lr > 0.0)) problems.push_back("critic.lr must be positive");
    if (c.critic.epochs < 1) problems.push_back("critic.epochs must be >= 1");
    if (c.critic.hidden < 1) problems.push_back("critic.hidden must be >= 1");
    if (!(c.baseline.delta_kl > 0.0)) problems.push_back("baseline.delta_kl must be positive");
    if (!(c.baseline.critic_lr > 0.0)) problems.push_back("baseline.critic_lr must be positive");
    if (c.baseline.episodes < 1) problems.push_back("baseline.episodes must be >= 1");
    if (c.trust_region.cg_iters < 1) problems.push_back("trust_region.cg_iters must be >= 1");
    if (!(c.trust_region.damping >= 0.0)) problems.push_back("trust_region.damping must be >= 0");
    if (c.trust_region.backtracks < 1) problems.push_back("trust_region.backtracks must be >= 1");
    if (c.hrl.option_steps < 1) problems.push_back("hrl.option_steps must be >= 1");
    if (c.hrl.stall_steps < 1) problems.push_back("hrl.stall_steps must be >= 1");
    if (!(c.blend.value >= 0.0 && c.blend.value <= 1.0)) problems.push_back("blend.value must lie in [0, 1]");
    if (!(c.blend.timescale > 0.0)) problems.push_back("blend.timescale must be positive");
    if (c.blend.true_episodes < 1) problems.push_back("blend.true_episodes must be >= 1");
    if (!(c.reward_sum.bonus >= 0.0)) problems.push_back("reward_sum.bonus must be >= 0");
    if (c.eval.episodes < 1) problems.push_back("eval.episodes must be >= 1");
    if (c.env.horizon < 0) problems.push_back("env.horizon must be >= 1 (0 selects the layout default)");
    if (!(c.env.gamma < 1.0)) problems.push_back("env.gamma must lie in [0, 1)");
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

/// Parses YAML text into a RunConfig; `source` prefixes error locations.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(detail::where(source, e.mark) + ": " + e.msg);
    }
    RunConfig c;
    if (!root || root.IsNull()) return c;
    detail::Section top(root, source, "");
    top.get_enum("agent", kAgentNames, c.agent).get("seed", c.seed).get("output_dir", c.output_dir);
    {
        auto s = top.child("budget");
        s.get("samples", c.budget).finish();
    }
    {
        auto s = top.child("env");
        s.get("name", c.env.name).get("map", c.env.map).get("horizon", c.env.horizon).get("gamma", c.env.gamma).finish();
    }
    {
        auto s = top.child("intrinsic");
        s.get_enum("kind", kIntrinsicNames, c.intrinsic).get("seed", c.intrinsic_seed).finish();
    }
    {
        auto s = top.child("irpo");
        s.get("K", c.irpo.K)
            .get("N", c.irpo.N)
            .get("eta", c.irpo.eta)
            .get("delta_kl", c.irpo.delta_kl)
            .get("tau_floor", c.irpo.tau_floor)
            .get("tau_anneal_fraction", c.irpo.tau_anneal_fraction)
            .get("explore_episodes", c.irpo.explore_episodes)
            .get("final_episodes", c.irpo.final_episodes)
            .get("discounted_performance", c.irpo.discounted_performance)
            .get_enum("base_update", kBaseUpdateNames, c.irpo.base_update)
            .get("base_lr", c.irpo.base_lr)
            .finish();
    }
    {
        auto s = top.child("critic");
        s.get("lambda", c.critic.lambda)
            .get("lr", c.critic.lr)
            .get("epochs", c.critic.epochs)
            .get("hidden", c.critic.hidden)
            .get_enum("optimizer", kCriticOptimizerNames, c.critic.optimizer)
            .finish();
    }
    {
        auto s = top.child("baseline");
        s.get("delta_kl", c.baseline.delta_kl)
            .get("critic_lr", c.baseline.critic_lr)
            .get("episodes", c.baseline.episodes)
            .finish();
    }
    {
        auto s = top.child("trust_region");
        s.get("cg_iters", c.trust_region.cg_iters)
            .get("damping", c.trust_region.damping)
            .get("backtracks", c.trust_region.backtracks)
            .finish();
    }
    {
        auto s = top.child("hrl");
        s.get("pretrain_samples", c.hrl.pretrain_samples)
            .get("option_steps", c.hrl.option_steps)
            .get("stall_steps", c.hrl.stall_steps)
            .finish();
    }
    {
        auto s = top.child("blend");
        s.get_enum("mode", kBlendNames, c.blend.mode)
            .get("value", c.blend.value)
            .get("timescale", c.blend.timescale)
            .get("true_episodes", c.blend.true_episodes)
            .finish();
    }
    {
        auto s = top.child("reward_sum");
        s.get("bonus", c.reward_sum.bonus).finish();
    }
    {
        auto s = top.child("eval");
        s.get("episodes", c.eval.episodes).get("interval", c.eval.interval).finish();
    }
    top.finish();
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config(s.str(), path);
}

/// Every field of the config as YAML; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& c) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "agent" << YAML::Value << agent_name(c.agent);
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
    e << YAML::Key << "budget" << YAML::Value << YAML::BeginMap << YAML::Key << "samples" << YAML::Value << c.budget
      << YAML::EndMap;
    e << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << c.env.name;
    e << YAML::Key << "map" << YAML::Value << YAML::DoubleQuoted << c.env.map;
    e << YAML::Key << "horizon" << YAML::Value << c.env.horizon;
    e << YAML::Key << "gamma" << YAML::Value << c.env.gamma;
    e << YAML::EndMap;
    e << YAML::Key << "intrinsic" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << detail::enum_name(kIntrinsicNames, c.intrinsic);
    e << YAML::Key << "seed" << YAML::Value << c.intrinsic_seed;
    e << YAML::EndMap;
    e << YAML::Key << "irpo" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "K" << YAML::Value << c.irpo.K;
    e << YAML::Key << "N" << YAML::Value << c.irpo.N;
    e << YAML::Key << "eta" << YAML::Value << c.irpo.eta;
    e << YAML::Key << "delta_kl" << YAML::Value << c.irpo.delta_kl;
    e << YAML::Key << "tau_floor" << YAML::Value << c.irpo.tau_floor;
    e << YAML::Key << "tau_anneal_fraction" << YAML::Value << c.irpo.tau_anneal_fraction;
    e << YAML::Key << "explore_episodes" << YAML::Value << c.irpo.explore_episodes;
    e << YAML::Key << "final_episodes" << YAML::Value << c.irpo.final_episodes;
    e << YAML::Key << "discounted_performance" << YAML::Value << c.irpo.discounted_performance;
    e << YAML::Key << "base_update" << YAML::Value << detail::enum_name(kBaseUpdateNames, c.irpo.base_update);
    e << YAML::Key << "base_lr" << YAML::Value << c.irpo.base_lr;
    e << YAML::EndMap;
    e << YAML::Key << "critic" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "lambda" << YAML::Value << c.critic.lambda;
    e << YAML::Key << "lr" << YAML::Value << c.critic.lr;
    e << YAML::Key << "epochs" << YAML::Value << c.critic.epochs;
    e << YAML::Key << "hidden" << YAML::Value << c.critic.hidden;
    e << YAML::Key << "optimizer" << YAML::Value << detail::enum_name(kCriticOptimizerNames, c.critic.optimizer);
    e << YAML::EndMap;
    e << YAML::Key << "baseline" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "delta_kl" << YAML::Value << c.baseline.delta_kl;
    e << YAML::Key << "critic_lr" << YAML::Value << c.baseline.critic_lr;
    e << YAML::Key << "episodes" << YAML::Value << c.baseline.episodes;
    e << YAML::EndMap;
    e << YAML::Key << "trust_region" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "cg_iters" << YAML::Value << c.trust_region.cg_iters;
    e << YAML::Key << "damping" << YAML::Value << c.trust_region.damping;
    e << YAML::Key << "backtracks" << YAML::Value << c.trust_region.backtracks;
    e << YAML::EndMap;
    e << YAML::Key << "hrl" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "pretrain_samples" << YAML::Value << c.hrl.pretrain_samples;
    e << YAML::Key << "option_steps" << YAML::Value << c.hrl.option_steps;
    e << YAML::Key << "stall_steps" << YAML::Value << c.hrl.stall_steps;
    e << YAML::EndMap;
    e << YAML::Key << "blend" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mode" << YAML::Value << detail::enum_name(kBlendNames, c.blend.mode);
    e << YAML::Key << "value" << YAML::Value << c.blend.value;
    e << YAML::Key << "timescale" << YAML::Value << c.blend.timescale;
    e << YAML::Key << "true_episodes" << YAML::Value << c.blend.true_episodes;
    e << YAML::EndMap;
    e << YAML::Key << "reward_sum" << YAML::Value << YAML::BeginMap << YAML::Key << "bonus" << YAML::Value
      << c.reward_sum.bonus << YAML::EndMap;
    e << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "episodes" << YAML::Value << c.eval.episodes;
    e << YAML::Key << "interval" << YAML::Value << c.eval.interval;
    e << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace irpo
