#include <gtest/gtest.h>

#include "irpo/baselines/blend.hpp"
#include "irpo/baselines/hrl.hpp"
#include "irpo/baselines/importance.hpp"
#include "irpo/baselines/reward_sum.hpp"
#include "test_support.hpp"

namespace irpo {
namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.env.name = "room";
    cfg.irpo.K = 2;
    cfg.irpo.explore_episodes = 2;
    cfg.irpo.final_episodes = 2;
    cfg.baseline.episodes = 4;
    cfg.critic.hidden = 16;
    cfg.budget = 10'000;
    return cfg;
}

GridContext context(const char* map, int horizon, int k, const RunConfig& cfg) {
    GridSpec g = load_grid(map, horizon, 0.95, "room");
    IntrinsicRewardSet r = k > 0 ? build_laplacian_rewards(g, k) : IntrinsicRewardSet::empty(g.num_states());
    return make_context(std::move(g), std::move(r), cfg);
}

GridContext small_context(const RunConfig& cfg) { return context("S...\n.#..\n...G\n", 20, 2, cfg); }

TEST(Vanilla, SolvesShortCorridor) {
    RunConfig cfg = small_config();
    cfg.baseline.critic_lr = 1e-3;
    cfg.budget = 30'000;
    const GridContext ctx = context("S..G\n", 20, 1, cfg);
    const auto r = vanilla_pg_train(cfg, ctx);
    EXPECT_GT(r.iterations, 0);
    EXPECT_LE(r.samples, cfg.budget);
    EXPECT_EQ(r.final_eval.success_rate, 1.0);
}

TEST(Vanilla, ZeroGradientLeavesPolicy) {
    const RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    Rng rng(1);
    const ParamVector theta = init_actor(ctx.actor, rng);
    SampleCounter c;
    const Batch b = collect(ctx.grid, ctx.policy_net().table(theta), ctx.intrinsic, 3, rng, c);
    const Vec g = policy_gradient(ctx.policy_net(), theta, b, std::vector<double>(batch_samples(b), 0.0));
    EXPECT_EQ(g.squaredNorm(), 0.0);
    const auto step = policy_trust_region_step(ctx, theta, g, 1e-2, state_distribution(b, ctx.num_states()),
                                               cfg.trust_region);
    EXPECT_EQ(step.params, theta);
}

TEST(Vanilla, Deterministic) {
    const RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    EXPECT_EQ(vanilla_pg_train(cfg, ctx).base, vanilla_pg_train(cfg, ctx).base);
}

struct ImportanceFixture : ::testing::Test {
    RunConfig cfg = small_config();
    GridContext ctx = small_context(cfg);
    Rng rng{2};
    ParamVector theta = init_actor(ctx.actor, rng);

    ExploratoryRun run_at(const ParamVector& explore) {
        ExploratoryRun run;
        run.params = {theta, explore};
        SampleCounter c;
        run.final_batch = collect(ctx.grid, ctx.policy_net().table(explore), ctx.intrinsic, 4, rng, c);
        std::normal_distribution<double> n;
        for (std::size_t i = 0; i < batch_samples(run.final_batch); ++i) run.final_advantages.push_back(n(rng));
        return run;
    }
};

TEST_F(ImportanceFixture, EqualPoliciesGiveUnitRatios) {
    const auto run = run_at(theta);
    const auto g = is_gradient(ctx, theta, run);
    for (double r : g.ratios) EXPECT_EQ(r, 1.0);
    EXPECT_EQ(g.gradient, policy_gradient(ctx.policy_net(), theta, run.final_batch, run.final_advantages));
    EXPECT_EQ(g.clipped, 0);
}

TEST_F(ImportanceFixture, RatiosMatchProbabilityTables) {
    const ParamVector other = theta + 0.3 * test::random_vector(theta.size(), rng);
    const auto run = run_at(other);
    const auto g = is_gradient(ctx, theta, run);
    const PolicyTable p = ctx.policy_net().table(theta), q = ctx.policy_net().table(other);
    std::size_t i = 0;
    for (const auto& traj : run.final_batch)
        for (const auto& tr : traj.steps) {
            const double expect = p(tr.state, tr.action) / q(tr.state, tr.action);
            EXPECT_NEAR(g.ratios[i++], expect, 1e-12 * expect);
        }
}

TEST_F(ImportanceFixture, RatiosScaleTheGradient) {
    // Doubling every weight doubles the estimate: the estimator is linear in rho A.
    const auto run = run_at(theta);
    ExploratoryRun doubled = run;
    for (double& a : doubled.final_advantages) a *= 2.0;
    EXPECT_LE((is_gradient(ctx, theta, doubled).gradient - 2.0 * is_gradient(ctx, theta, run).gradient)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
}

TEST_F(ImportanceFixture, ExtremeRatiosAreClipped) {
    // Output biases push the base towards action 0 and the explorer away from it.
    const std::size_t last = ctx.actor.hidden_dims.size();
    const std::size_t bias = ctx.actor.layer_offset(last) + ctx.actor.hidden_dims.back() * ctx.actor.output_dim;
    ParamVector explore = theta;
    theta[static_cast<Eigen::Index>(bias)] += 20.0;
    explore[static_cast<Eigen::Index>(bias)] -= 20.0;
    auto run = run_at(explore);
    // Force the explorer to have taken action 0 at least once.
    run.final_batch.front().steps.front().action = 0;
    const auto g = is_gradient(ctx, theta, run);
    EXPECT_GT(g.clipped, 0);
    for (double r : g.ratios) EXPECT_LE(r, kMaxImportanceRatio);
    EXPECT_TRUE(g.gradient.allFinite());
}

TEST(RewardSum, ZeroBonusEqualsVanilla) {
    RunConfig cfg = small_config();
    cfg.reward_sum.bonus = 0.0;
    const GridContext ctx = small_context(cfg);
    EXPECT_EQ(reward_sum_train(cfg, ctx).base, vanilla_pg_train(cfg, ctx).base);
}

TEST(RewardSum, ChannelMixesMeanIntrinsic) {
    Transition t;
    t.reward = 1.0;
    EXPECT_EQ(reward_sum_channel(0.5)(t), 1.0);
    t.intrinsic = {0.2, -0.6};
    EXPECT_DOUBLE_EQ(reward_sum_channel(0.5)(t), 1.0 + 0.5 * -0.2);
    RunConfig cfg = small_config();
    cfg.reward_sum.bonus = -1.0;
    EXPECT_THROW(reward_sum_train(cfg, small_context(cfg)), ConfigError);
}

TEST(Hrl, OptionsRespectStepLimit) {
    RunConfig cfg = small_config();
    const GridContext ctx = context("S.......\n........\n.......G\n", 60, 2, cfg);
    OptionPolicy options;
    options.subpolicies.assign(2, PolicyTable::Constant(ctx.num_states(), kNumActions, 0.25));
    Rng rng(3);
    SampleCounter c;
    for (int o = 0; o < options.num_options(); ++o)
        for (int trial = 0; trial < 50; ++trial) {
            const auto out = run_option(ctx, options, o, reset(ctx.grid), false, rng, c);
            EXPECT_GE(out.steps, 1);
            EXPECT_LE(out.steps, options.max_steps);
        }
}

TEST(Hrl, RandomWalkOnlyRarelySucceedsOnLargeMaze) {
    RunConfig cfg;
    GridSpec g = make_builtin_grid("maze-v2");
    const int n = g.num_states();
    const GridContext ctx = make_context(std::move(g), IntrinsicRewardSet::empty(n), cfg);
    OptionPolicy options;
    const PolicyTable high = PolicyTable::Ones(ctx.num_states(), 1);
    Rng rng(4);
    EXPECT_LT(evaluate_options(ctx, options, high, 200, rng).success_rate, 0.05);
}

TEST(Hrl, UnitDurationMatchesLambdaReturns) {
    Rng rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 50; ++trial) {
        Trajectory t;
        const int T = 1 + trial % 6;
        for (int i = 0; i < T; ++i) {
            Transition tr;
            tr.state = i;
            tr.next_state = i + 1;
            tr.reward = n(rng);
            t.steps.push_back(tr);
        }
        t.steps.back().terminal = true;
        t.steps.back().truncated = trial % 2 == 0;
        const Vec table = test::random_vector(T + 1, rng);
        const auto values = trajectory_values(t, table);
        std::vector<double> r;
        for (const auto& tr : t.steps) r.push_back(tr.reward);
        const auto expect = lambda_returns(r, values, 0.9, 0.7);
        const auto got = smdp_lambda_returns(t, table, 0.9, 0.7);
        for (int i = 0; i < T; ++i) EXPECT_NEAR(got[i], expect[i], 1e-13);
    }
}

TEST(Hrl, LongOptionsDiscountByDuration) {
    Trajectory t;
    Transition a;
    a.state = 0;
    a.next_state = 1;
    a.duration = 3;
    Transition b;
    b.state = 1;
    b.next_state = 2;
    b.reward = 1.0;
    b.duration = 2;
    b.terminal = true;
    t.steps = {a, b};
    const auto g = smdp_lambda_returns(t, Vec::Zero(3), 0.9, 1.0);
    EXPECT_NEAR(g[1], 1.0, 1e-15);
    EXPECT_NEAR(g[0], std::pow(0.9, 3), 1e-15);
}

TEST(Hrl, TrainsWithinBudget) {
    RunConfig cfg = small_config();
    cfg.hrl.pretrain_samples = 2'000;
    cfg.budget = 8'000;
    const GridContext ctx = small_context(cfg);
    OptionPolicy trained;
    const auto r = hrl_train(cfg, ctx, {}, &trained);
    EXPECT_LE(r.samples, cfg.budget);
    EXPECT_EQ(trained.subpolicies.size(), 2u);
    EXPECT_EQ(trained.num_options(), 3);
}

TEST(Blend, ScheduleShapes) {
    BlendSchedule s;
    s.mode = BlendMode::abrupt;
    EXPECT_EQ(s.beta(5, std::nullopt), 0.0);
    EXPECT_EQ(s.beta(5, 7), 0.0);
    EXPECT_EQ(s.beta(7, 7), 1.0);
    s.mode = BlendMode::exponential;
    s.timescale = 10.0;
    EXPECT_EQ(s.beta(3, 3), 0.0);
    EXPECT_NEAR(s.beta(13, 3), 1.0 - std::exp(-1.0), 1e-15);
    s.mode = BlendMode::linear;
    EXPECT_DOUBLE_EQ(s.beta(8, 3), 0.5);
    EXPECT_DOUBLE_EQ(s.beta(40, 3), 1.0);
    s.mode = BlendMode::constant;
    s.value = 0.3;
    EXPECT_EQ(s.beta(1, std::nullopt), 0.3);
}

TEST(Blend, ZeroBetaIsPureIrpo) {
    RunConfig cfg = small_config();
    cfg.blend.mode = BlendMode::constant;
    cfg.blend.value = 0.0;
    const GridContext ctx = small_context(cfg);
    std::vector<double> betas;
    const auto blended = blended_train(cfg, ctx, blend_schedule(cfg.blend), {}, &betas);
    const auto pure = train_irpo(cfg, ctx);
    EXPECT_EQ(blended.base, pure.base);
    EXPECT_EQ(blended.samples, pure.samples);
    for (double b : betas) EXPECT_EQ(b, 0.0);
}

TEST(Blend, InvalidScheduleRejected) {
    BlendConfig c;
    c.mode = BlendMode::constant;
    c.value = 1.5;
    EXPECT_THROW(blend_schedule(c), ConfigError);
    c.mode = BlendMode::linear;
    c.timescale = 0.0;
    EXPECT_THROW(blend_schedule(c), ConfigError);
}

TEST(Baselines, ImportanceTrainingDeterministic) {
    RunConfig cfg = small_config();
    cfg.budget = 4'000;
    const GridContext ctx = small_context(cfg);
    EXPECT_EQ(is_irpo_train(cfg, ctx).base, is_irpo_train(cfg, ctx).base);
}

}  // namespace
}  // namespace irpo
