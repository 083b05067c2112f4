// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "irpo/baselines/hrl.hpp"
#include "irpo/baselines/importance.hpp"
#include "irpo/harness/analytic.hpp"
#include "oracles.hpp"

namespace irpo {
namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double sample_sd(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double mean(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    return x.empty() ? 0.0 : m / static_cast<double>(x.size());
}

Outcome analytic_fixed_point() {
    const auto t0 = std::chrono::steady_clock::now();
    AnalyticOptions opt;  // K = 1, c = (0, -2), eta = 0.1, N = 5
    const Vec target = quadratic_fixed_point(opt.intrinsic_centers[0], opt.eta, opt.N);
    const auto r = analytic_run(opt);
    int reached = -1;
    for (const auto& it : r.iterations)
        if (reached < 0 && (it.base - target).norm() <= 1e-3) reached = it.iteration;
    const double err = (r.final_base - target).norm();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {err <= 1e-3 && reached > 0 && secs < 1.0,
            "final (" + fmt("%.6f", r.final_base[0]) + ", " + fmt("%.6f", r.final_base[1]) + "), error " +
                fmt("%.2e", err) + ", within 1e-3 at iteration " + std::to_string(reached) + ", " +
                fmt("%.3f", secs) + " s"};
}

Outcome multi_objective_selection() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    int ok = 0;
    double worst_weight = 1.0;
    for (int trial = 0; trial < 20; ++trial) {
        AnalyticOptions opt;
        opt.intrinsic_centers = default_quadratic_centers(4);
        opt.theta0 = test::random_vector(2, rng, 2.0);
        const auto r = analytic_run(opt);
        const auto& last = r.iterations.back();
        Eigen::Index best;
        const double w = last.weights.maxCoeff(&best);
        worst_weight = std::min(worst_weight, w);
        const double chosen = last.runs[static_cast<std::size_t>(best)].params.back().norm();
        bool closest = true;
        for (const auto& run : last.runs) closest = closest && chosen <= run.params.back().norm();
        ok += w >= 0.99 && closest;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {ok == 20 && secs < 5.0, std::to_string(ok) + "/20 initializations select the closest run, min omega_max " +
                                        fmt("%.4f", worst_weight) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome jacobian_chain() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(7);
    double quad_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double eta = 0.01 + 0.2 * (trial % 10) / 10.0;
        const int N = 1 + trial % 7;
        UpdateTape tape;
        Vec theta = test::random_vector(2, rng);
        const Vec c = test::random_vector(2, rng);
        for (int j = 0; j < N; ++j) {
            auto [t, obj] = record_quadratic({c}, theta);
            theta = exploratory_update(std::move(t), obj, eta, tape).next;
        }
        const Vec u = test::random_vector(2, rng);
        quad_err = std::max(quad_err, (tape.vjp(u) - std::pow(1.0 - 2.0 * eta, N) * u).cwiseAbs().maxCoeff());
    }
    int within = 0;
    double worst_rel = 0.0;
    const auto m = test::ComposedMap::random(rng, 8, 16);
    const ParamVector theta = init_actor(m.net.spec, rng);
    const ParamVector bp = m.backprop(theta);
    for (int i = 0; i < 50; ++i) {
        Vec d = test::random_vector(theta.size(), rng);
        d /= d.norm();
        const double exact = d.dot(bp);
        const double fd = m.directional_fd(theta, d, 1e-5);
        const double rel = std::abs(fd - exact) / std::max(std::abs(exact), 1e-8);
        worst_rel = std::max(worst_rel, rel);
        within += rel <= 1e-3;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {quad_err <= 1e-12 && within == 50 && secs < 30.0,
            "quadratic max error " + fmt("%.1e", quad_err) + ", MLP " + std::to_string(within) +
                "/50 directions, worst relative error " + fmt("%.1e", worst_rel) + ", " + fmt("%.2f", secs) + " s"};
}

std::vector<double> brute_force_lambda_returns(const std::vector<double>& r, const std::vector<double>& v,
                                               double gamma, double lambda) {
    const std::size_t T = r.size();
    std::vector<double> out(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t max_n = T - t;
        double total = 0.0;
        for (std::size_t n = 1; n <= max_n; ++n) {
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += std::pow(gamma, static_cast<double>(i)) * r[t + i];
            g += std::pow(gamma, static_cast<double>(n)) * v[t + n];
            const double w = n < max_n ? (1.0 - lambda) * std::pow(lambda, static_cast<double>(n - 1))
                                       : std::pow(lambda, static_cast<double>(max_n - 1));
            total += w * g;
        }
        out[t] = total;
    }
    return out;
}

Outcome lambda_return_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0), unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10'000; ++trial) {
        const std::size_t T = 1 + static_cast<std::size_t>(trial % 6);
        std::vector<double> r(T), v(T + 1);
        for (auto& x : r) x = u(rng);
        for (auto& x : v) x = u(rng);
        const double gamma = 0.999 * unit(rng), lambda = unit(rng);
        const auto fast = lambda_returns(r, v, gamma, lambda);
        const auto slow = brute_force_lambda_returns(r, v, gamma, lambda);
        for (std::size_t t = 0; t < T; ++t) worst = std::max(worst, std::abs(fast[t] - slow[t]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-12 && secs < 10.0,
            "10000 cases, max error " + fmt("%.1e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome vanishing_gradient() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(13);
    int violations = 0;
    double worst = 0.0;
    for (int L : {3, 5, 8}) {
        const auto r = test::vanishing_gradient_bound(L, 50, rng);
        violations += r.violations;
        worst = std::max(worst, r.worst_ratio);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {violations == 0 && secs < 60.0, std::to_string(violations) + " violations over 150 policies, max ratio " +
                                                fmt("%.3f", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome degenerate_unroll() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;
    cfg.irpo.N = 1;
    cfg.irpo.eta = 0.0;
    cfg.budget = 60'000;
    const GridContext ctx = make_context(cfg);
    const auto net = ctx.policy_net();
    int checked = 0, equal = 0;
    train_irpo(cfg, ctx, {}, {}, [&](const IterationReport& rep) {
        std::vector<Vec> plain;
        bool same = true;
        for (const auto& run : *rep.runs) {
            same = same && run.final_params() == *rep.theta_before;
            const auto adv = advantages(run.final_batch, run.final_value_table, extrinsic_channel(), ctx.grid.gamma);
            plain.push_back(policy_gradient(net, *rep.theta_before, run.final_batch, adv));
            same = same && backprop_through_updates(run) == plain.back();
        }
        Vec combined = Vec::Zero(rep.theta_before->size());
        for (std::size_t k = 0; k < plain.size(); ++k) combined += rep.gradient->weights[static_cast<Eigen::Index>(k)] * plain[k];
        same = same && combined == rep.gradient->vector;
        ++checked;
        equal += same;
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {checked > 0 && equal == checked && secs < 10.0,
            std::to_string(equal) + "/" + std::to_string(checked) + " iterations bitwise equal, " +
                fmt("%.2f", secs) + " s"};
}

struct SeedRuns {
    std::vector<TrainResult> irpo;
    std::vector<TrainResult> vanilla;
    double seconds = 0.0;
};

RunConfig fourrooms_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.eval.episodes = 10;
    return cfg;
}

SeedRuns end_to_end(int seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedRuns out;
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = fourrooms_config(static_cast<std::uint64_t>(s));
        const GridContext ctx = make_context(cfg);
        out.irpo.push_back(train_irpo(cfg, ctx));
        std::cerr << "  irpo seed " << s << ": success " << out.irpo.back().final_eval.success_rate << '\n';
        out.vanilla.push_back(vanilla_pg_train(cfg, ctx));
        std::cerr << "  vanilla seed " << s << ": success " << out.vanilla.back().final_eval.success_rate << '\n';
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Outcome trust_region_safety(const SeedRuns& runs) {
    const double delta = RunConfig{}.irpo.delta_kl;
    std::size_t total = 0, within = 0;
    double worst = 0.0;
    for (const auto& r : runs.irpo)
        for (double kl : r.accepted_kl) {
            ++total;
            within += kl <= 1.2 * delta;
            worst = std::max(worst, kl);
        }
    return {total > 0 && within == total, std::to_string(within) + "/" + std::to_string(total) +
                                              " accepted steps within 1.2 delta, max KL " + fmt("%.3e", worst) +
                                              " (delta " + fmt("%.0e", delta) + ")"};
}

Outcome sparse_reward_learning(const SeedRuns& runs) {
    int solved = 0;
    std::vector<double> vanilla;
    std::string per_seed;
    for (std::size_t s = 0; s < runs.irpo.size(); ++s) {
        const double ok = runs.irpo[s].final_eval.success_rate;
        solved += ok >= 0.9;
        per_seed += (s ? " " : "") + fmt("%.1f", ok);
        vanilla.push_back(runs.vanilla[s].final_eval.success_rate);
    }
    const int need = static_cast<int>(runs.irpo.size()) - 1;
    return {solved >= need && mean(vanilla) <= 0.3,
            "IRPO success per seed [" + per_seed + "], " + std::to_string(solved) + "/" +
                std::to_string(runs.irpo.size()) + " >= 0.9; vanilla mean " + fmt("%.2f", mean(vanilla)) + ", " +
                fmt("%.0f", runs.seconds) + " s"};
}

Outcome random_reward_robustness(int seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> irpo, hrl;
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = fourrooms_config(static_cast<std::uint64_t>(s));
        cfg.intrinsic = IntrinsicKind::random;
        cfg.intrinsic_seed = static_cast<std::uint64_t>(s);
        const GridContext ctx = make_context(cfg);
        irpo.push_back(train_irpo(cfg, ctx).final_eval.success_rate);
        hrl.push_back(hrl_train(cfg, ctx).final_eval.success_rate);
        std::cerr << "  random rewards seed " << s << ": irpo " << irpo.back() << ", hrl " << hrl.back() << '\n';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mean(irpo) > mean(hrl), "mean success IRPO " + fmt("%.2f", mean(irpo)) + " vs HRL " +
                                        fmt("%.2f", mean(hrl)) + ", " + fmt("%.0f", secs) + " s"};
}

Outcome importance_pathology(int seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> irpo, is;
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = fourrooms_config(static_cast<std::uint64_t>(s));
        cfg.env.name = "maze-v1";
        const GridContext ctx = make_context(cfg);
        irpo.push_back(train_irpo(cfg, ctx).final_eval.mean_return);
        is.push_back(is_irpo_train(cfg, ctx).final_eval.mean_return);
        std::cerr << "  maze-v1 seed " << s << ": irpo " << irpo.back() << ", is " << is.back() << '\n';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {sample_sd(is) > sample_sd(irpo), "final-return sd IS " + fmt("%.4f", sample_sd(is)) + " vs IRPO " +
                                                 fmt("%.4f", sample_sd(irpo)) + " (means " + fmt("%.3f", mean(is)) +
                                                 ", " + fmt("%.3f", mean(irpo)) + "), " + fmt("%.0f", secs) + " s"};
}

}  // namespace
}  // namespace irpo

int main(int argc, char** argv) {
    using namespace irpo;
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    int seeds = 5;
    app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 10));
    app.add_option("--seeds", seeds, "seeds for the training criteria")->check(CLI::Range(1, 100));
    // A listed criterion still prints FAIL but does not set the exit code;
    // errors thrown while checking it always count.
    std::vector<int> known;
    app.add_option("--known-limitation", known, "criteria whose FAIL is documented and tolerated")
        ->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                                : std::set<int>(only.begin(), only.end());

    const std::vector<std::pair<int, std::string>> names{
        {1, "analytic fixed point"},          {2, "multi-objective selection"},
        {3, "Jacobian chain"},                {4, "lambda-return oracle"},
        {5, "vanishing-gradient bound"},      {6, "trust-region safety"},
        {7, "degenerate unroll identity"},    {8, "sparse-reward learning"},
        {9, "random-reward robustness"},      {10, "importance-sampling pathology"}};

    const std::set<int> tolerated(known.begin(), known.end());
    int failures = 0;
    auto report = [&](int id, const Outcome& o, bool error = false) {
        const bool excused = !o.pass && !error && tolerated.count(id);
        std::cout << "criterion " << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << names[id - 1].second << ": "
                  << o.detail << (excused ? " [known limitation]" : "") << std::endl;
        failures += !o.pass && !excused;
    };
    auto guarded = [&](int id, const std::function<Outcome()>& f) {
        if (!selected.count(id)) return;
        try {
            report(id, f());
        } catch (const std::exception& e) {
            report(id, {false, std::string("error: ") + e.what()}, true);
        }
    };

    guarded(1, analytic_fixed_point);
    guarded(2, multi_objective_selection);
    guarded(3, jacobian_chain);
    guarded(4, lambda_return_oracle);
    guarded(5, vanishing_gradient);
    std::optional<SeedRuns> runs;
    std::string run_error;
    if (selected.count(6) || selected.count(8)) {
        try {
            runs = end_to_end(seeds);
        } catch (const std::exception& e) {
            run_error = std::string("error: ") + e.what();
        }
    }
    guarded(6, [&] { return runs ? trust_region_safety(*runs) : Outcome{false, run_error}; });
    guarded(7, degenerate_unroll);
    guarded(8, [&] { return runs ? sparse_reward_learning(*runs) : Outcome{false, run_error}; });
    guarded(9, [&] { return random_reward_robustness(seeds); });
    guarded(10, [&] { return importance_pathology(seeds); });
    return failures == 0 ? 0 : 1;
}
