#include <gtest/gtest.h>

#include "irpo/core/irpo.hpp"
#include "irpo/harness/analytic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace irpo {
namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.env.name = "room";
    cfg.irpo.K = 2;
    cfg.irpo.explore_episodes = 2;
    cfg.irpo.final_episodes = 2;
    cfg.critic.hidden = 16;
    cfg.budget = 20'000;
    return cfg;
}

GridContext small_context(const RunConfig& cfg, int k = 2) {
    GridSpec g = load_grid("S...\n.#..\n...G\n", 20, 0.95, "room");
    IntrinsicRewardSet r = build_laplacian_rewards(g, k);
    return make_context(std::move(g), std::move(r), cfg);
}

TEST(ExploratoryUpdate, ZeroStepIsIdentity) {
    Rng rng(1);
    const Vec theta = test::random_vector(2, rng);
    UpdateTape tape;
    auto [t, obj] = record_quadratic({Vec{{1.0, 2.0}}}, theta);
    const auto step = exploratory_update(std::move(t), obj, 0.0, tape);
    EXPECT_EQ(step.next, theta);
    const Vec g = test::random_vector(2, rng);
    EXPECT_EQ(tape.vjp(g), g);
}

TEST(ExploratoryUpdate, QuadraticStep) {
    const double eta = 0.1;
    const Vec c{{0.5, -1.5}};
    const Vec theta{{2.0, 3.0}};
    UpdateTape tape;
    auto [t, obj] = record_quadratic({c}, theta);
    const Vec next = exploratory_update(std::move(t), obj, eta, tape).next;
    EXPECT_LE((next - ((1 - 2 * eta) * theta + 2 * eta * c)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExploratoryUpdate, ZeroAdvantageLeavesPolicyUnchanged) {
    const RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    Rng rng(2);
    const ParamVector theta = init_actor(ctx.actor, rng);
    SampleCounter c;
    const Batch b = collect(ctx.grid, ctx.policy_net().table(theta), ctx.intrinsic, 3, rng, c);
    UpdateTape tape;
    const auto step = exploratory_update(ctx, theta, b, std::vector<double>(batch_samples(b), 0.0), 0.5, tape);
    EXPECT_EQ(step.next, theta);
}

TEST(ExploratoryUpdate, AnalyticFiveSteps) {
    const auto run = analytic_exploratory({Vec{{0.0, -2.0}}}, {Vec::Zero(2)}, Vec::Zero(2), 5, 0.1, 0);
    ASSERT_EQ(run.params.size(), 6u);
    EXPECT_NEAR(run.params.back()[0], 0.0, 1e-15);
    EXPECT_NEAR(run.params.back()[1], -1.34464, 1e-12);
}

TEST(ExploratoryRuns, ChannelsProduceDistinctPolicies) {
    RunConfig cfg = small_config();
    cfg.irpo.K = 3;
    const GridContext ctx = small_context(cfg, 3);
    Rng init(3);
    const ParamVector theta = init_actor(ctx.actor, init);
    std::vector<ParamVector> finals;
    for (int k = 0; k < 3; ++k) {
        CriticPair critics = init_critic_pair(ctx.critic, init);
        Rng rng = make_rng(cfg.seed, kStreamExplore, static_cast<std::uint64_t>(k));
        SampleCounter c;
        const auto run = run_exploratory(ctx, cfg, theta, k, critics, rng, c);
        EXPECT_EQ(run.params.size(), static_cast<std::size_t>(cfg.irpo.N + 1));
        EXPECT_EQ(run.tape.size(), static_cast<std::size_t>(cfg.irpo.N));
        finals.push_back(run.final_params());
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) EXPECT_GT((finals[i] - finals[j]).norm(), 0.0);
}

TEST(Backprop, ZeroStepReturnsGradient) {
    Rng rng(4);
    auto m = test::ComposedMap::random(rng);
    m.eta = 0.0;
    const ParamVector theta = init_actor(m.net.spec, rng);
    auto o = record_surrogate(m.policy(), theta, m.outer_weights);
    EXPECT_EQ(m.backprop(theta), grad(o.tape, o.objective));
}

TEST(Backprop, QuadraticChainContracts) {
    Rng rng(5);
    for (int N : {1, 3, 5, 8}) {
        const double eta = 0.07;
        const Vec g = test::random_vector(2, rng);
        UpdateTape tape;
        Vec theta = test::random_vector(2, rng);
        for (int j = 0; j < N; ++j) {
            auto [t, obj] = record_quadratic({Vec{{1.0, -1.0}}}, theta);
            theta = exploratory_update(std::move(t), obj, eta, tape).next;
        }
        EXPECT_LE((tape.vjp(g) - std::pow(1 - 2 * eta, N) * g).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Backprop, MatchesFiniteDifferencesOnMlp) {
    Rng rng(6);
    const auto m = test::ComposedMap::random(rng);
    const ParamVector theta = init_actor(m.net.spec, rng);
    const ParamVector bp = m.backprop(theta);
    for (int i = 0; i < 20; ++i) {
        Vec d = test::random_vector(theta.size(), rng);
        d /= d.norm();
        const double exact = d.dot(bp);
        const double fd = m.directional_fd(theta, d, 1e-5);
        EXPECT_NEAR(fd, exact, 1e-3 * std::max(std::abs(exact), 1e-6));
    }
}

TEST(Backprop, IsLinear) {
    Rng rng(7);
    const auto m = test::ComposedMap::random(rng);
    const ParamVector theta = init_actor(m.net.spec, rng);
    UpdateTape tape;
    auto s = record_surrogate(m.policy(), theta, m.inner_weights);
    exploratory_update(std::move(s.tape), s.objective, 0.3, tape);
    const Vec a = test::random_vector(theta.size(), rng), b = test::random_vector(theta.size(), rng);
    const Vec lhs = tape.vjp(2.0 * a - 0.5 * b);
    const Vec rhs = 2.0 * tape.vjp(a) - 0.5 * tape.vjp(b);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Backprop, LengthMismatchRaises) {
    UpdateTape tape;
    auto [t, obj] = record_quadratic({Vec::Zero(2)}, Vec::Ones(2));
    exploratory_update(std::move(t), obj, 0.1, tape);
    EXPECT_THROW(tape.vjp(Vec::Zero(3)), ConfigError);
}

TEST(Weights, TwoRunExample) {
    const Vec w = softmax_weights(Vec{{1.0, 0.0}}, 1.0);
    EXPECT_NEAR(w[0], 0.7310585786, 1e-9);
    EXPECT_NEAR(w[1], 0.2689414214, 1e-9);
}

TEST(Weights, EqualPerformanceIsUniform) {
    const Vec w = softmax_weights(Vec::Constant(4, 0.3), 0.05);
    for (double x : w) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Weights, SimplexAndTemperatureMonotone) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec perf = test::random_vector(5, rng, 10.0);
        Eigen::Index best;
        perf.maxCoeff(&best);
        double prev = 0.0;
        for (double tau : {1.0, 0.5, 0.2, 0.05}) {
            const Vec w = softmax_weights(perf, tau);
            EXPECT_NEAR(w.sum(), 1.0, 1e-12);
            EXPECT_GE(w.minCoeff(), 0.0);
            EXPECT_GE(w[best], prev - 1e-15);
            prev = w[best];
        }
    }
    EXPECT_THROW(softmax_weights(Vec::Zero(2), 0.0), ConfigError);
    EXPECT_THROW(softmax_weights(Vec{{1.0, NAN}}, 1.0), NumericalError);
}

TEST(Weights, AnnealSchedule) {
    EXPECT_DOUBLE_EQ(anneal_tau(0, 100), 1.0);
    EXPECT_DOUBLE_EQ(anneal_tau(5, 100), 0.525);
    EXPECT_DOUBLE_EQ(anneal_tau(10, 100), 0.05);
    EXPECT_DOUBLE_EQ(anneal_tau(90, 100), 0.05);
}

TEST(TrustRegion, ZeroGradientNoStep) {
    const Vec theta{{1.0, 2.0}};
    auto r = trust_region_step(theta, Vec::Zero(2), 1e-3, [](const Vec& v) { return v; },
                               [](const ParamVector&) { return 0.0; });
    EXPECT_EQ(r.params, theta);
    EXPECT_TRUE(r.accepted);
}

TEST(TrustRegion, IdentityFisherStepLength) {
    const Vec theta = Vec::Zero(3);
    const double delta = 1e-3;
    auto kl = [&](const ParamVector& p) { return 0.4 * (p - theta).squaredNorm(); };
    const auto r = trust_region_step(theta, Vec{{3.0, -1.0, 2.0}}, delta, [](const Vec& v) { return v; }, kl,
                                     {10, 0.0, 10});
    EXPECT_TRUE(r.accepted);
    EXPECT_FALSE(r.used_fallback);
    EXPECT_EQ(r.backtracks_used, 0);
    EXPECT_NEAR(r.params.norm(), std::sqrt(2 * delta), 1e-12);
    EXPECT_NEAR(r.params.norm(), 0.044721, 1e-6);
}

TEST(TrustRegion, FallbackOnIndefiniteFisher) {
    const Vec g{{1.0, 1.0}};
    const auto r = trust_region_step(Vec::Zero(2), g, 1e-3, [](const Vec& v) -> Vec { return -v; },
                                     [](const ParamVector&) { return 0.0; });
    EXPECT_TRUE(r.used_fallback);
    EXPECT_TRUE(r.accepted);
    EXPECT_NEAR(r.params.norm(), std::sqrt(2e-3), 1e-12);
    EXPECT_GT(r.params.dot(g), 0.0);
}

TEST(TrustRegion, RejectsWhenKlNeverFits) {
    const auto r = trust_region_step(Vec::Zero(2), Vec::Ones(2), 1e-3, [](const Vec& v) { return v; },
                                     [](const ParamVector&) { return 1.0; });
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.params, Vec::Zero(2));
    EXPECT_FALSE(r.warning.empty());
}

TEST(TrustRegion, PolicyStepRespectsKl) {
    const RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    Rng rng(9);
    const auto net = ctx.policy_net();
    const Vec weights = Vec::Constant(ctx.num_states(), 1.0 / ctx.num_states());
    for (int trial = 0; trial < 5; ++trial) {
        const ParamVector theta = init_actor(ctx.actor, rng);
        const Vec g = test::random_vector(theta.size(), rng);
        const auto r = policy_trust_region_step(ctx, theta, g, 1e-3, weights, cfg.trust_region);
        ASSERT_TRUE(r.accepted);
        EXPECT_LE(mean_kl(net.log_table(theta), net.log_table(r.params), weights), 1e-3);
        EXPECT_GT(r.params.dot(g) - theta.dot(g), 0.0);
    }
}

TEST(FisherVectorProduct, MatchesKlHessian) {
    // The Fisher is the Hessian of KL(pi_theta || pi_theta') at theta' = theta.
    const RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    Rng rng(10);
    const auto net = ctx.policy_net();
    const ParamVector theta = init_actor(ctx.actor, rng);
    const Vec w = Vec::Constant(ctx.num_states(), 1.0 / ctx.num_states());
    const Vec v = test::random_vector(theta.size(), rng);
    const Mat old_log = net.log_table(theta);
    const double h = 1e-4;
    // d^2/dt^2 KL(theta, theta + t v) at t = 0 equals v^T F v.
    const double kl_p = mean_kl(old_log, net.log_table(theta + h * v), w);
    const double kl_m = mean_kl(old_log, net.log_table(theta - h * v), w);
    const double second = (kl_p + kl_m) / (h * h);
    const double vfv = v.dot(fisher_vector_product(net.record(theta), w, v));
    EXPECT_NEAR(second, vfv, 1e-4 * std::abs(vfv));
}

TEST(Train, BudgetBelowOneIterationRunsNothing) {
    RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    cfg.budget = irpo_iteration_cost(cfg, ctx.grid.horizon) - 1;
    const auto r = train_irpo(cfg, ctx);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.samples, 0u);
    EXPECT_TRUE(r.rows.empty());
}

TEST(Train, NeverExceedsBudget) {
    RunConfig cfg = small_config();
    const GridContext ctx = small_context(cfg);
    const auto r = train_irpo(cfg, ctx);
    EXPECT_GT(r.iterations, 0);
    EXPECT_LE(r.samples, cfg.budget);
    for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_GT(r.rows[i].samples, r.rows[i - 1].samples);
    for (const auto& row : r.rows) {
        double s = 0.0;
        for (double w : row.omega) s += w;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Train, SameSeedSameResult) {
    RunConfig cfg = small_config();
    cfg.budget = 5'000;
    const GridContext ctx = small_context(cfg);
    const auto a = train_irpo(cfg, ctx), b = train_irpo(cfg, ctx);
    EXPECT_EQ(a.base, b.base);
    EXPECT_EQ(a.output_policy, b.output_policy);
    cfg.seed = 1;
    EXPECT_NE(train_irpo(cfg, ctx).base, a.base);
}

// With eta = 0 and N = 1 the exploratory policy is the base policy and the
// IRPO gradient reduces to the plain extrinsic policy gradient.
TEST(Train, DegenerateUnrollIsPlainPolicyGradient) {
    RunConfig cfg = small_config();
    cfg.irpo.K = 1;
    cfg.irpo.N = 1;
    cfg.irpo.eta = 0.0;
    cfg.budget = 6'000;
    const GridContext ctx = small_context(cfg, 1);
    const auto net = ctx.policy_net();
    int checked = 0;
    train_irpo(cfg, ctx, {}, {}, [&](const IterationReport& rep) {
        const auto& run = rep.runs->front();
        EXPECT_EQ(run.final_params(), *rep.theta_before);
        const auto adv = advantages(run.final_batch, run.final_value_table, extrinsic_channel(), ctx.grid.gamma);
        EXPECT_EQ(rep.gradient->vector, policy_gradient(net, *rep.theta_before, run.final_batch, adv));
        ++checked;
    });
    EXPECT_GT(checked, 0);
}

TEST(Analytic, FixedPointClosedForm) {
    EXPECT_NEAR(quadratic_fixed_point(Vec{{0.0, -2.0}}, 0.1, 5)[1], 4.103515625, 1e-12);
    AnalyticOptions opt;
    const auto r = analytic_run(opt);
    EXPECT_LE((r.final_base - Vec{{0.0, 4.103515625}}).norm(), 1e-3);
}

TEST(Analytic, SelectsClosestRunWithFourObjectives) {
    AnalyticOptions opt;
    opt.intrinsic_centers = default_quadratic_centers(4);
    opt.theta0 = Vec{{0.3, -0.7}};
    const auto r = analytic_run(opt);
    const auto& last = r.iterations.back();
    Eigen::Index best;
    EXPECT_GE(last.weights.maxCoeff(&best), 0.99);
    const double chosen = last.runs[static_cast<std::size_t>(best)].params.back().norm();
    for (const auto& run : last.runs) EXPECT_LE(chosen, run.params.back().norm() + 1e-12);
}

TEST(Analytic, MoreStepsLandFartherOut) {
    AnalyticOptions opt;
    opt.N = 2;
    const double two = analytic_run(opt).final_base.norm();
    opt.N = 5;
    const double five = analytic_run(opt).final_base.norm();
    EXPECT_NEAR(two, quadratic_fixed_point(Vec{{0.0, -2.0}}, 0.1, 2).norm(), 1e-3);
    EXPECT_GT(five, two);
}

TEST(Bound, HoldsOnSmallCorridor) {
    Rng rng(11);
    const auto r = test::vanishing_gradient_bound(3, 20, rng);
    EXPECT_EQ(r.violations, 0);
    EXPECT_LE(r.worst_ratio, 1.0);
}

}  // namespace
}  // namespace irpo
