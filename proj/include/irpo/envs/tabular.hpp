#pragma once

// Exact finite-horizon quantities for a tabular softmax policy on a small
// grid: return, policy gradient and goal-reach probability, all by forward
// propagation of the state distribution over time.

#include <cmath>
#include <string>

#include "irpo/envs/grid.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

/// 1 x L corridor with the start at the left end and the goal at the right.
inline GridSpec make_corridor(int length, int horizon, double gamma) {
    expects(length >= 2, "corridor needs at least two cells");
    std::string row(static_cast<std::size_t>(length), '.');
    row.front() = 'S';
    row.back() = 'G';
    return load_grid(row + "\n", horizon, gamma, "corridor");
}

/// Row-wise softmax of a states x actions logit table.
inline Mat softmax_rows(const Mat& logits) {
    Mat p = logits;
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
        const double m = p.row(s).maxCoeff();
        p.row(s) = (p.row(s).array() - m).exp().matrix();
        p.row(s) /= p.row(s).sum();
    }
    return p;
}

struct TabularAnalysis {
    double value = 0.0;      // J = E[sum_t gamma^t r_t]
    Mat gradient;            // dJ / dlogits, states x actions
    double reach = 0.0;      // P(goal reached within the horizon)
    double kappa = 0.0;      // max_{s,a} ||grad_logits log pi(a|s)||
};

/// Exact analysis of the tabular softmax policy with the given logits.
inline TabularAnalysis analyze_tabular(const GridSpec& spec, const Mat& logits) {
    const int n = spec.num_states();
    expects(logits.rows() == n && logits.cols() == kNumActions, "logit table must be states x 4");
    const Mat pi = softmax_rows(logits);
    const int goal = spec.goal_state();
    const int H = spec.horizon;

    Mat next(n, kNumActions);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < kNumActions; ++a)
            next(s, a) = spec.state_of(spec.move(spec.cell_of_state(s), static_cast<Action>(a)));

    // Backward pass: Q_t(s,a) = r + gamma V_{t+1}(s'), V_H = 0, V(goal) = 0.
    std::vector<Mat> q(static_cast<std::size_t>(H), Mat::Zero(n, kNumActions));
    Vec v_next = Vec::Zero(n);
    for (int t = H - 1; t >= 0; --t) {
        Mat& qt = q[static_cast<std::size_t>(t)];
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < kNumActions; ++a) {
                const int sp = static_cast<int>(next(s, a));
                qt(s, a) = sp == goal ? 1.0 : spec.gamma * v_next[sp];
            }
        Vec v = (pi.array() * qt.array()).rowwise().sum().matrix();
        v[goal] = 0.0;
        v_next = v;
    }

    // Forward pass over the distribution of not-yet-terminated states.
    TabularAnalysis out;
    out.gradient = Mat::Zero(n, kNumActions);
    Vec d = Vec::Zero(n);
    d[spec.start_state()] = 1.0;
    double discount = 1.0;
    for (int t = 0; t < H; ++t) {
        const Mat& qt = q[static_cast<std::size_t>(t)];
        Vec d_next = Vec::Zero(n);
        for (int s = 0; s < n; ++s) {
            if (d[s] == 0.0 || s == goal) continue;
            const double vs = pi.row(s).dot(qt.row(s));
            for (int a = 0; a < kNumActions; ++a) {
                // pi (Q - V) is the softmax-logit gradient of pi . Q.
                out.gradient(s, a) += discount * d[s] * pi(s, a) * (qt(s, a) - vs);
                const int sp = static_cast<int>(next(s, a));
                if (sp == goal) {
                    out.reach += d[s] * pi(s, a);
                    out.value += discount * d[s] * pi(s, a);
                } else {
                    d_next[sp] += d[s] * pi(s, a);
                }
            }
        }
        d = d_next;
        discount *= spec.gamma;
    }

    for (int s = 0; s < n; ++s)
        for (int a = 0; a < kNumActions && s != goal; ++a) {
            Vec e = -pi.row(s).transpose();
            e[a] += 1.0;
            out.kappa = std::max(out.kappa, e.norm());
        }
    return out;
}

}  // namespace irpo
