#pragma once

#include <utility>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"
#include "irpo/numerics/tape.hpp"

namespace irpo {

/// J(theta) = -||theta - center||^2. Strictly concave, maximised at center.
struct QuadraticObjective {
    Vec center;
};

struct QuadEval {
    double value;
    Vec gradient;
};

inline QuadEval quad_eval(const QuadraticObjective& obj, const Vec& theta) {
    if (theta.size() != obj.center.size())
        throw ConfigError("quad_eval: theta has dimension " + std::to_string(theta.size()) + ", objective has " +
                          std::to_string(obj.center.size()));
    const Vec d = theta - obj.center;
    return {-d.squaredNorm(), -2.0 * d};
}

/// Records the objective on a tape over parameters theta; returns the tape and
/// the scalar objective node.
inline std::pair<GradTape, NodeId> record_quadratic(const QuadraticObjective& obj, const Vec& theta) {
    if (theta.size() != obj.center.size()) throw ConfigError("record_quadratic: dimension mismatch");
    GradTape tape(theta);
    const auto dim = static_cast<std::size_t>(theta.size());
    const NodeId p = tape.param(0, 1, dim);
    const NodeId diff = tape.affine(p, 1.0, -obj.center.transpose());
    const NodeId sq = tape.mul(diff, diff);
    const NodeId total = tape.sum(sq);
    const NodeId j = tape.affine(total, -1.0, Mat::Zero(1, 1));
    return {std::move(tape), j};
}

}  // namespace irpo
