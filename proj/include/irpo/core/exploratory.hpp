#pragma once

#include <utility>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/tape.hpp"

namespace irpo {

/// One recorded ascent step theta' = theta + eta grad J(theta). The tape keeps
/// the objective's intermediates so the step's Jacobian I + eta H can be
/// applied to vectors later without forming H.
struct UpdateStep {
    GradTape tape;
    NodeId objective;
    double eta;
};

/// The unrolled chain of exploratory updates of one run.
struct UpdateTape {
    std::vector<UpdateStep> steps;

    std::size_t size() const { return steps.size(); }

    /// (J_N ... J_1)^T g, applied as J_1^T (... (J_N^T g)). Each J_j is
    /// symmetric, so J_j^T u = u + eta H_j u.
    ParamVector vjp(const ParamVector& g) const {
        ParamVector u = g;
        for (std::size_t j = steps.size(); j-- > 0;) {
            const auto& s = steps[j];
            if (u.size() != s.tape.params().size())
                throw ConfigError("update tape: vector length " + std::to_string(u.size()) +
                                  " does not match recorded parameters " + std::to_string(s.tape.params().size()));
            u = u + s.eta * hvp(s.tape, s.objective, u);
        }
        return u;
    }
};

struct ExploratoryStep {
    ParamVector next;
    ParamVector gradient;
};

/// Performs and records one ascent step of the objective held in `tape`.
inline ExploratoryStep exploratory_update(GradTape tape, NodeId objective, double eta, UpdateTape& record) {
    ParamVector g = grad(tape, objective);
    if (!g.allFinite()) throw NumericalError("exploratory update: non-finite gradient");
    ExploratoryStep out{tape.params() + eta * g, std::move(g)};
    record.steps.push_back({std::move(tape), objective, eta});
    return out;
}

}  // namespace irpo
