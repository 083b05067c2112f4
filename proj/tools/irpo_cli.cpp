#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "irpo/harness/aggregate.hpp"
#include "irpo/harness/analytic.hpp"
#include "irpo/harness/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Writes to `path`, or stdout when it is empty or "-".
void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw irpo::ConfigError("cannot write " + path);
    out << text;
}

struct TrainArgs {
    std::string config;
    std::string agent;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> budget;
};

int cmd_train(const TrainArgs& a) {
    irpo::RunConfig cfg = a.config.empty() ? irpo::RunConfig{} : irpo::load_config(a.config);
    if (!a.agent.empty()) irpo::apply_agent_name(a.agent, cfg);
    if (a.seed) cfg.seed = *a.seed;
    if (a.budget) cfg.budget = *a.budget;
    std::string dir = a.output.empty() ? cfg.output_dir : a.output;
    if (dir.empty()) dir = "runs/" + std::string(irpo::agent_name(cfg.agent)) + "_seed" + std::to_string(cfg.seed);
    cfg.output_dir = dir;
    const auto summary = irpo::run_training(cfg, dir);
    const auto& r = summary.result;
    std::printf("%s seed %llu: %d iterations, %llu samples, final success %.3f, return %.6f -> %s\n",
                irpo::agent_name(cfg.agent), static_cast<unsigned long long>(cfg.seed), r.iterations,
                static_cast<unsigned long long>(r.samples), r.final_eval.success_rate, r.final_eval.mean_return,
                dir.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& policy, std::optional<int> episodes, std::uint64_t seed) {
    const irpo::SavedPolicy p = irpo::load_policy(policy);
    const irpo::EvalResult r = irpo::evaluate_saved(p, episodes.value_or(p.config.eval.episodes), seed);
    std::printf("mean_return,success\n%s,%s\n", irpo::format_double(r.mean_return).c_str(),
                irpo::format_double(r.success_rate).c_str());
    return kExitOk;
}

struct RewardArgs {
    std::string config;
    std::string env;
    std::string map;
    std::string kind;
    std::optional<int> K;
    std::optional<std::uint64_t> seed;
    std::string output;
};

int cmd_rewards(const RewardArgs& a) {
    irpo::RunConfig cfg = a.config.empty() ? irpo::RunConfig{} : irpo::load_config(a.config);
    if (!a.env.empty()) cfg.env.name = a.env;
    if (!a.map.empty()) cfg.env.map = a.map;
    if (a.K) cfg.irpo.K = *a.K;
    if (a.seed) cfg.intrinsic_seed = *a.seed;
    if (!a.kind.empty()) {
        if (a.kind == "laplacian") cfg.intrinsic = irpo::IntrinsicKind::laplacian;
        else if (a.kind == "random") cfg.intrinsic = irpo::IntrinsicKind::random;
        else throw irpo::ConfigError("--kind must be laplacian or random");
    }
    const irpo::GridSpec grid = irpo::load_environment(cfg);
    if (cfg.irpo.K < 1) throw irpo::ConfigError("--K must be >= 1");
    write_output(a.output, irpo::dump_reward_maps(irpo::build_intrinsic(cfg, grid, cfg.irpo.K), grid));
    return kExitOk;
}

struct AnalyticArgs {
    int K = 1;
    std::optional<double> tau;
    int N = 5;
    double eta = 0.1;
    double lr = 1.0;
    int iterations = 500;
    std::vector<double> theta0{0.0, 0.0};
    std::string output;
};

int cmd_analytic(const AnalyticArgs& a) {
    if (a.K < 1 || a.K > 4) throw irpo::ConfigError("--K must be between 1 and 4");
    if (a.N < 1) throw irpo::ConfigError("--N must be >= 1");
    if (a.iterations < 0) throw irpo::ConfigError("--iterations must be >= 0");
    if (a.tau && !(*a.tau > 0.0)) throw irpo::ConfigError("--tau must be positive");
    irpo::AnalyticOptions opt;
    opt.intrinsic_centers = irpo::default_quadratic_centers(a.K);
    opt.N = a.N;
    opt.eta = a.eta;
    opt.base_lr = a.lr;
    opt.iterations = a.iterations;
    opt.tau = a.tau;
    opt.theta0 = irpo::Vec{{a.theta0[0], a.theta0[1]}};
    const auto result = irpo::analytic_run(opt);
    std::ostringstream csv;
    irpo::write_trajectory_csv(result, irpo::QuadraticObjective{opt.extrinsic_center}, csv);
    write_output(a.output, csv.str());
    std::fprintf(stderr, "final base (%.9f, %.9f)\n", result.final_base[0], result.final_base[1]);
    return kExitOk;
}

int cmd_aggregate(const std::vector<std::string>& files, const std::string& column, int points,
                  const std::string& output) {
    std::vector<irpo::Curve> curves;
    for (const auto& f : files) curves.push_back(irpo::read_metrics_file(f, column));
    std::ostringstream csv;
    irpo::write_aggregate_csv(irpo::aggregate_curves(curves, points), csv);
    write_output(output, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intrinsic reward policy optimization: training, evaluation and analysis"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train one agent to its sample budget");
    t->add_option("-c,--config", train.config, "YAML config file")->check(CLI::ExistingFile);
    t->add_option("-a,--agent", train.agent, "irpo, vanilla, is-irpo, reward-sum, hrl, blend or blend-<mode>");
    t->add_option("-o,--output", train.output, "output directory");
    t->add_option("-s,--seed", train.seed, "seed override");
    t->add_option("-b,--budget", train.budget, "sample budget override");

    std::string policy;
    std::optional<int> episodes;
    std::uint64_t eval_seed = 0;
    auto* e = app.add_subcommand("eval", "replay a saved policy with greedy actions");
    e->add_option("policy", policy, "policy.json written by train")->required()->check(CLI::ExistingFile);
    e->add_option("-n,--episodes", episodes, "episodes (default: the run's eval.episodes)");
    e->add_option("-s,--seed", eval_seed, "tie-break seed");

    RewardArgs rewards;
    auto* r = app.add_subcommand("rewards", "dump intrinsic reward maps as CSV");
    r->add_option("-c,--config", rewards.config, "YAML config file")->check(CLI::ExistingFile);
    r->add_option("--env", rewards.env, "built-in environment name");
    r->add_option("--map", rewards.map, "ASCII map file")->check(CLI::ExistingFile);
    r->add_option("--kind", rewards.kind, "laplacian or random");
    r->add_option("--K", rewards.K, "number of reward channels");
    r->add_option("--seed", rewards.seed, "seed for random rewards");
    r->add_option("-o,--output", rewards.output, "output CSV (default stdout)");

    AnalyticArgs analytic;
    auto* an = app.add_subcommand("analytic", "run the two-dimensional quadratic testbed");
    an->add_option("--K", analytic.K, "number of intrinsic objectives (1-4)");
    an->add_option("--tau", analytic.tau, "fixed temperature (default: annealed)");
    an->add_option("--N", analytic.N, "exploratory updates per run");
    an->add_option("--eta", analytic.eta, "exploratory step size");
    an->add_option("--lr", analytic.lr, "base step size");
    an->add_option("--iterations", analytic.iterations, "base iterations");
    an->add_option("--theta0", analytic.theta0, "initial base parameters")->expected(2);
    an->add_option("-o,--output", analytic.output, "output CSV (default stdout)");

    std::vector<std::string> files;
    std::string column = "success";
    int points = 100;
    std::string agg_output;
    auto* ag = app.add_subcommand("aggregate", "merge per-seed metrics into mean and 95% confidence curves");
    ag->add_option("files", files, "metrics.csv files")->required()->check(CLI::ExistingFile);
    ag->add_option("--column", column, "metrics column to aggregate");
    ag->add_option("--points", points, "number of sample checkpoints");
    ag->add_option("-o,--output", agg_output, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return kExitConfig;
    }

    try {
        if (*t) return cmd_train(train);
        if (*e) return cmd_eval(policy, episodes, eval_seed);
        if (*r) return cmd_rewards(rewards);
        if (*an) return cmd_analytic(analytic);
        if (*ag) return cmd_aggregate(files, column, points, agg_output);
    } catch (const irpo::ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const irpo::NumericalError& ex) {
        std::cerr << "numerical failure: " << ex.what() << '\n';
        return kExitNumerical;
    } catch (const irpo::ContractViolation& ex) {
        std::cerr << "invalid argument: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& ex) {
        std::cerr << "filesystem error: " << ex.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
