#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

struct EigenSystem {
    Vec values;   // ascending
    Mat vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
inline EigenSystem sym_eig(const Mat& matrix, int max_sweeps = 100) {
    const Eigen::Index n = matrix.rows();
    expects(matrix.cols() == n, "sym_eig: matrix must be square");
    const double scale = std::max(matrix.cwiseAbs().maxCoeff(), 1e-300);
    expects((matrix - matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(scale, 1.0),
            "sym_eig: matrix is not symmetric");

    Mat a = 0.5 * (matrix + matrix.transpose());
    Mat v = Mat::Identity(n, n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < j; ++i) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double total = a.norm();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= 1e-15 * std::max(total, 1e-300)) break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // A <- J^T A J on rows/cols p, q
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
    EigenSystem out{Vec(n), Mat(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace irpo
