#pragma once

// IRPO on closed-form quadratic objectives: the parameters are optimised
// directly, gradients are exact and no environment is involved.

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "irpo/core/exploratory.hpp"
#include "irpo/core/weights.hpp"
#include "irpo/envs/quadratic.hpp"
#include "irpo/harness/metrics.hpp"

namespace irpo {

/// Intrinsic centers in the order the testbed uses them.
inline std::vector<Vec> default_quadratic_centers(int k) {
    static const double raw[4][2] = {{0.0, -2.0}, {-2.0, 2.0}, {2.0, 2.0}, {-2.0, -2.0}};
    expects(k >= 1 && k <= 4, "the built-in testbed has between 1 and 4 intrinsic objectives");
    std::vector<Vec> out;
    for (int i = 0; i < k; ++i) out.push_back(Vec{{raw[i][0], raw[i][1]}});
    return out;
}

struct AnalyticOptions {
    Vec extrinsic_center = Vec::Zero(2);
    std::vector<Vec> intrinsic_centers = default_quadratic_centers(1);
    int N = 5;
    double eta = 0.1;
    double base_lr = 1.0;
    int iterations = 500;
    std::optional<double> tau;  // fixed temperature; unset anneals
    double tau_floor = 0.05;
    double tau_anneal_fraction = 0.1;
    Vec theta0 = Vec::Zero(2);
};

struct AnalyticRun {
    int k = 0;
    std::vector<Vec> params;  // theta~(1) .. theta~(N+1)
    Vec backpropagated;
    double extrinsic_value = 0.0;
};

struct AnalyticIteration {
    int iteration = 0;
    Vec base;
    double base_value = 0.0;
    double tau = 1.0;
    std::vector<AnalyticRun> runs;
    Vec weights;
};

struct AnalyticResult {
    std::vector<AnalyticIteration> iterations;
    Vec final_base;
};

/// theta* with N exploratory steps on J~(theta) = -||theta - c||^2 landing
/// exactly at the extrinsic optimum 0: c (1 - (1 - 2 eta)^-N).
inline Vec quadratic_fixed_point(const Vec& center, double eta, int N) {
    return center * (1.0 - std::pow(1.0 - 2.0 * eta, -static_cast<double>(N)));
}

inline AnalyticRun analytic_exploratory(const QuadraticObjective& intrinsic, const QuadraticObjective& extrinsic,
                                        const Vec& theta, int N, double eta, int k) {
    AnalyticRun run;
    run.k = k;
    run.params.push_back(theta);
    UpdateTape tape;
    for (int j = 0; j < N; ++j) {
        auto [t, obj] = record_quadratic(intrinsic, run.params.back());
        run.params.push_back(exploratory_update(std::move(t), obj, eta, tape).next);
    }
    const QuadEval e = quad_eval(extrinsic, run.params.back());
    run.extrinsic_value = e.value;
    run.backpropagated = tape.vjp(e.gradient);
    return run;
}

inline AnalyticResult analytic_run(const AnalyticOptions& opt) {
    if (opt.intrinsic_centers.empty()) throw ConfigError("analytic: at least one intrinsic objective is required");
    if (opt.N < 1) throw ConfigError("analytic: N must be >= 1");
    if (opt.iterations < 0) throw ConfigError("analytic: iterations must be >= 0");
    const QuadraticObjective extrinsic{opt.extrinsic_center};
    AnalyticResult out;
    Vec theta = opt.theta0;
    for (int i = 0; i < opt.iterations; ++i) {
        AnalyticIteration it;
        it.iteration = i + 1;
        it.base = theta;
        it.base_value = quad_eval(extrinsic, theta).value;
        it.tau = opt.tau ? *opt.tau : anneal_tau(i, opt.iterations, opt.tau_floor, opt.tau_anneal_fraction);
        std::vector<Vec> grads;
        Vec perf(static_cast<Eigen::Index>(opt.intrinsic_centers.size()));
        for (std::size_t k = 0; k < opt.intrinsic_centers.size(); ++k) {
            it.runs.push_back(analytic_exploratory({opt.intrinsic_centers[k]}, extrinsic, theta, opt.N, opt.eta,
                                                   static_cast<int>(k)));
            grads.push_back(it.runs.back().backpropagated);
            perf[static_cast<Eigen::Index>(k)] = it.runs.back().extrinsic_value;
        }
        const IrpoGradient g = combine_gradients(grads, perf, it.tau);
        it.weights = g.weights;
        theta = theta + opt.base_lr * g.vector;
        require_finite(theta, "analytic base parameters");
        out.iterations.push_back(std::move(it));
    }
    out.final_base = theta;
    return out;
}

inline constexpr const char* kTrajectoryHeader = "iter,entity,k,j,x,y,value";

/// Base and exploratory parameter paths; value is the extrinsic objective.
inline void write_trajectory_csv(const AnalyticResult& r, const QuadraticObjective& extrinsic, std::ostream& out) {
    out << kTrajectoryHeader << '\n';
    for (const auto& it : r.iterations) {
        out << it.iteration << ",base,-1,0," << format_double(it.base[0]) << ',' << format_double(it.base[1]) << ','
            << format_double(it.base_value) << '\n';
        for (const auto& run : it.runs)
            for (std::size_t j = 0; j < run.params.size(); ++j) {
                const Vec& p = run.params[j];
                out << it.iteration << ",exploratory," << run.k << ',' << j + 1 << ',' << format_double(p[0]) << ','
                    << format_double(p[1]) << ',' << format_double(quad_eval(extrinsic, p).value) << '\n';
            }
    }
}

}  // namespace irpo
