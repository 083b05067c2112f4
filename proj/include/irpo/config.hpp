#pragma once

#include <cstdint>
#include <string>

namespace irpo {

enum class AgentKind { irpo, vanilla, is_irpo, reward_sum, hrl, blend };
enum class IntrinsicKind { laplacian, random };
enum class BaseUpdate { trust_region, ascent };
enum class BlendMode { constant, abrupt, exponential, linear };
enum class CriticOptimizer { adam, sgd };

struct EnvConfig {
    std::string name = "fourrooms";
    std::string map;      // path to an ASCII layout; empty selects the built-in layout
    int horizon = 0;      // 0: layout default
    double gamma = -1.0;  // negative: layout default
};

struct IrpoConfig {
    int K = 0;  // 0: layout default (number of subpolicies)
    int N = 5;
    double eta = 1e-2;
    double delta_kl = 2e-3;
    double tau_floor = 0.05;
    double tau_anneal_fraction = 0.1;
    int explore_episodes = 8;
    int final_episodes = 16;
    bool discounted_performance = true;
    BaseUpdate base_update = BaseUpdate::trust_region;
    double base_lr = 1e-2;  // plain-ascent ablation only
};

struct CriticConfig {
    double lambda = 0.95;
    double lr = 3e-3;
    int epochs = 3;
    int hidden = 128;
    CriticOptimizer optimizer = CriticOptimizer::adam;
};

struct BaselineConfig {
    double delta_kl = 1e-2;
    double critic_lr = 3e-4;
    int episodes = 16;
};

struct TrustRegionConfig {
    int cg_iters = 10;
    double damping = 1e-2;
    int backtracks = 10;
};

struct HrlConfig {
    std::uint64_t pretrain_samples = 50000;  // per subpolicy
    int option_steps = 10;
    int stall_steps = 3;
};

struct BlendConfig {
    BlendMode mode = BlendMode::abrupt;
    double value = 0.0;      // beta for the constant mode
    double timescale = 20.0;  // iterations, exponential and linear modes
    int true_episodes = 16;
};

struct RewardSumConfig {
    double bonus = 0.1;
};

struct EvalConfig {
    int episodes = 1;
    std::uint64_t interval = 0;  // samples between evaluations; 0 evaluates every iteration
};

struct RunConfig {
    AgentKind agent = AgentKind::irpo;
    EnvConfig env;
    IntrinsicKind intrinsic = IntrinsicKind::laplacian;
    std::uint64_t intrinsic_seed = 0;
    IrpoConfig irpo;
    CriticConfig critic;
    BaselineConfig baseline;
    TrustRegionConfig trust_region;
    HrlConfig hrl;
    BlendConfig blend;
    RewardSumConfig reward_sum;
    EvalConfig eval;
    std::uint64_t budget = 2'000'000;
    std::uint64_t seed = 0;
    std::string output_dir;
};

}  // namespace irpo
