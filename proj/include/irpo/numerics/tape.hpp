#pragma once

// Record-and-replay tape over batched matrix primitives.
//
// Every node holds a (rows x cols) matrix; batch samples are rows. Parameters
// are referenced by offset into the flat ParamVector the tape was built
// against. Three sweeps are supported:
//   - reverse:            adjoints, giving d(seed . output)/d(params)
//   - forward tangent:    directional derivative of any node along v
//   - forward-over-reverse: tangent of the reverse sweep, giving H v for a
//                         scalar objective without forming H.

#include <cstddef>
#include <utility>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

using NodeId = std::size_t;

enum class OpKind {
    input,         // constant data
    param,         // params[offset .. offset + rows*cols) viewed row-major
    linear,        // x W^T + 1 b^T, W (out x in) row-major at offset, b follows
    tanh,
    log_softmax,   // row-wise
    gaussian_logp, // sum_d log N(action | mean, exp(log_std)^2); log_std at offset
    weighted_sum,  // sum_ij C_ij x_ij  -> 1x1
    mul,           // elementwise a * b
    sum,           // sum of all entries -> 1x1
    affine,        // scale * x + C
};

class GradTape {
public:
    explicit GradTape(ParamVector params) : params_(std::move(params)) {}

    NodeId input(Mat x) {
        Node n{OpKind::input};
        n.value = std::move(x);
        return push(std::move(n));
    }

    NodeId param(std::size_t offset, std::size_t rows, std::size_t cols) {
        expects(offset + rows * cols <= static_cast<std::size_t>(params_.size()),
                "param slice exceeds parameter vector");
        Node n{OpKind::param};
        n.offset = offset;
        n.rows = rows;
        n.cols = cols;
        return push(std::move(n));
    }

    NodeId linear(NodeId x, std::size_t offset, std::size_t out, std::size_t in) {
        check_node(x);
        if (static_cast<std::size_t>(nodes_[x].value.cols()) != in)
            throw ConfigError("linear layer expects " + std::to_string(in) + " inputs, got " +
                              std::to_string(nodes_[x].value.cols()));
        expects(offset + (in + 1) * out <= static_cast<std::size_t>(params_.size()),
                "linear layer exceeds parameter vector");
        Node n{OpKind::linear};
        n.a = x;
        n.offset = offset;
        n.rows = out;
        n.cols = in;
        return push(std::move(n));
    }

    NodeId tanh(NodeId x) { return unary(OpKind::tanh, x); }
    NodeId log_softmax(NodeId x) { return unary(OpKind::log_softmax, x); }
    NodeId sum(NodeId x) { return unary(OpKind::sum, x); }

    NodeId gaussian_log_density(NodeId mean, std::size_t log_std_offset, Mat actions) {
        check_node(mean);
        const auto& m = nodes_[mean].value;
        if (actions.rows() != m.rows() || actions.cols() != m.cols())
            throw ConfigError("gaussian head: action shape does not match mean");
        expects(log_std_offset + static_cast<std::size_t>(m.cols()) <= static_cast<std::size_t>(params_.size()),
                "log-std slice exceeds parameter vector");
        Node n{OpKind::gaussian_logp};
        n.a = mean;
        n.offset = log_std_offset;
        n.cols = static_cast<std::size_t>(m.cols());
        n.constant = std::move(actions);
        return push(std::move(n));
    }

    NodeId weighted_sum(NodeId x, Mat weights) {
        check_node(x);
        const auto& v = nodes_[x].value;
        if (weights.rows() != v.rows() || weights.cols() != v.cols())
            throw ConfigError("weighted_sum: weight shape does not match node");
        Node n{OpKind::weighted_sum};
        n.a = x;
        n.constant = std::move(weights);
        return push(std::move(n));
    }

    NodeId mul(NodeId a, NodeId b) {
        check_node(a);
        check_node(b);
        if (nodes_[a].value.rows() != nodes_[b].value.rows() || nodes_[a].value.cols() != nodes_[b].value.cols())
            throw ConfigError("mul: shape mismatch");
        Node n{OpKind::mul};
        n.a = a;
        n.b = b;
        return push(std::move(n));
    }

    NodeId affine(NodeId x, double scale, Mat shift) {
        check_node(x);
        const auto& v = nodes_[x].value;
        if (shift.rows() != v.rows() || shift.cols() != v.cols())
            throw ConfigError("affine: shift shape does not match node");
        Node n{OpKind::affine};
        n.a = x;
        n.scale = scale;
        n.constant = std::move(shift);
        return push(std::move(n));
    }

    const Mat& value(NodeId id) const {
        check_node(id);
        return nodes_[id].value;
    }
    double scalar(NodeId id) const {
        const auto& v = value(id);
        expects(v.size() == 1, "node is not scalar");
        return v(0, 0);
    }
    NodeId output() const {
        expects(!nodes_.empty(), "empty tape");
        return nodes_.size() - 1;
    }
    std::size_t size() const { return nodes_.size(); }
    const ParamVector& params() const { return params_; }

    /// Recomputes every node from its recorded inputs.
    void replay() {
        for (auto& n : nodes_) evaluate(n);
    }

private:
    friend struct TapeSweeps;

    struct Node {
        OpKind kind;
        NodeId a = 0;
        NodeId b = 0;
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        double scale = 1.0;
        Mat constant{};
        Mat value{};
    };

    void check_node(NodeId id) const { expects(id < nodes_.size(), "unknown tape node"); }

    NodeId unary(OpKind kind, NodeId x) {
        check_node(x);
        Node n{kind};
        n.a = x;
        return push(std::move(n));
    }

    NodeId push(Node n) {
        evaluate(n);
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    Eigen::Map<const RowMat> weight(const Node& n) const {
        return {params_.data() + n.offset, static_cast<Eigen::Index>(n.rows), static_cast<Eigen::Index>(n.cols)};
    }
    Eigen::Map<const Vec> bias(const Node& n) const {
        return {params_.data() + n.offset + n.rows * n.cols, static_cast<Eigen::Index>(n.rows)};
    }

    void evaluate(Node& n) const {
        switch (n.kind) {
        case OpKind::input:
            break;
        case OpKind::param:
            n.value = Eigen::Map<const RowMat>(params_.data() + n.offset, static_cast<Eigen::Index>(n.rows),
                                               static_cast<Eigen::Index>(n.cols));
            break;
        case OpKind::linear: {
            const Mat& x = nodes_[n.a].value;
            n.value.noalias() = x * weight(n).transpose();
            n.value.rowwise() += bias(n).transpose();
            break;
        }
        case OpKind::tanh:
            n.value = nodes_[n.a].value.array().tanh().matrix();
            break;
        case OpKind::log_softmax: {
            const Mat& x = nodes_[n.a].value;
            const Vec mx = x.rowwise().maxCoeff();
            Mat shifted = x.colwise() - mx;
            const Vec lse = shifted.array().exp().rowwise().sum().log().matrix();
            n.value = shifted.colwise() - lse;
            break;
        }
        case OpKind::gaussian_logp: {
            const Mat& mean = nodes_[n.a].value;
            const Eigen::Map<const Vec> log_std(params_.data() + n.offset, static_cast<Eigen::Index>(n.cols));
            const Eigen::ArrayXd inv_std = (-log_std.array()).exp();
            const Eigen::ArrayXXd z = (n.constant - mean).array().rowwise() * inv_std.transpose();
            constexpr double half_log_2pi = 0.91893853320467274178;
            n.value = (-0.5 * z.square()).rowwise().sum().matrix();
            n.value.array() -= log_std.sum() + half_log_2pi * static_cast<double>(n.cols);
            break;
        }
        case OpKind::weighted_sum:
            n.value = Mat::Constant(1, 1, (n.constant.array() * nodes_[n.a].value.array()).sum());
            break;
        case OpKind::mul:
            n.value = (nodes_[n.a].value.array() * nodes_[n.b].value.array()).matrix();
            break;
        case OpKind::sum:
            n.value = Mat::Constant(1, 1, nodes_[n.a].value.sum());
            break;
        case OpKind::affine:
            n.value = n.scale * nodes_[n.a].value + n.constant;
            break;
        }
    }

    ParamVector params_;
    std::vector<Node> nodes_;
};

struct TapeSweeps {
    using Node = GradTape::Node;

    static void accumulate(Mat& slot, const Mat& contribution) {
        if (slot.size() == 0)
            slot = contribution;
        else
            slot += contribution;
    }

    // Forward tangent of every node up to `last` along parameter direction v.
    static std::vector<Mat> tangents(const GradTape& tape, NodeId last, const ParamVector& v) {
        const auto& nodes = tape.nodes_;
        std::vector<Mat> dot(last + 1);
        for (NodeId i = 0; i <= last; ++i) {
            const Node& n = nodes[i];
            switch (n.kind) {
            case OpKind::input:
                dot[i] = Mat::Zero(n.value.rows(), n.value.cols());
                break;
            case OpKind::param:
                dot[i] = Eigen::Map<const RowMat>(v.data() + n.offset, static_cast<Eigen::Index>(n.rows),
                                                  static_cast<Eigen::Index>(n.cols));
                break;
            case OpKind::linear: {
                const Eigen::Map<const RowMat> w_dot(v.data() + n.offset, static_cast<Eigen::Index>(n.rows),
                                                     static_cast<Eigen::Index>(n.cols));
                const Eigen::Map<const Vec> b_dot(v.data() + n.offset + n.rows * n.cols,
                                                  static_cast<Eigen::Index>(n.rows));
                Mat d = dot[n.a] * tape.weight(n).transpose();
                d.noalias() += nodes[n.a].value * w_dot.transpose();
                d.rowwise() += b_dot.transpose();
                dot[i] = std::move(d);
                break;
            }
            case OpKind::tanh:
                dot[i] = (dot[n.a].array() * (1.0 - n.value.array().square())).matrix();
                break;
            case OpKind::log_softmax: {
                const Mat p = n.value.array().exp().matrix();
                const Vec inner = (p.array() * dot[n.a].array()).rowwise().sum().matrix();
                dot[i] = dot[n.a].colwise() - inner;
                break;
            }
            case OpKind::gaussian_logp: {
                const Eigen::Map<const Vec> log_std(tape.params_.data() + n.offset, static_cast<Eigen::Index>(n.cols));
                const Eigen::Map<const Vec> s_dot(v.data() + n.offset, static_cast<Eigen::Index>(n.cols));
                const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
                const Eigen::ArrayXXd diff = (n.constant - nodes[n.a].value).array();
                const Eigen::ArrayXXd z2 = diff.square().rowwise() * inv_var.transpose();
                Eigen::ArrayXXd terms = (diff.rowwise() * inv_var.transpose()) * dot[n.a].array();
                terms += (z2 - 1.0).rowwise() * s_dot.array().transpose();
                dot[i] = terms.rowwise().sum().matrix();
                break;
            }
            case OpKind::weighted_sum:
                dot[i] = Mat::Constant(1, 1, (n.constant.array() * dot[n.a].array()).sum());
                break;
            case OpKind::mul:
                dot[i] = (dot[n.a].array() * nodes[n.b].value.array() +
                          nodes[n.a].value.array() * dot[n.b].array()).matrix();
                break;
            case OpKind::sum:
                dot[i] = Mat::Constant(1, 1, dot[n.a].sum());
                break;
            case OpKind::affine:
                dot[i] = n.scale * dot[n.a];
                break;
            }
        }
        return dot;
    }

    // Reverse sweep from `out` seeded with `seed`. When `dot` is non-null the
    // tangent of the sweep is propagated alongside, producing H v in hvp_out.
    static void reverse(const GradTape& tape, NodeId out, const Mat& seed, const ParamVector* v,
                        const std::vector<Mat>* dot, ParamVector& grad_out, ParamVector* hvp_out) {
        const auto& nodes = tape.nodes_;
        const bool second = dot != nullptr;
        std::vector<Mat> adj(out + 1);
        std::vector<Mat> adj_dot(second ? out + 1 : 0);
        adj[out] = seed;
        if (second) adj_dot[out] = Mat::Zero(seed.rows(), seed.cols());

        auto grad_block = [&](ParamVector& g, std::size_t offset, std::size_t rows, std::size_t cols) {
            return Eigen::Map<RowMat>(g.data() + offset, static_cast<Eigen::Index>(rows),
                                      static_cast<Eigen::Index>(cols));
        };

        for (NodeId step = out + 1; step-- > 0;) {
            if (adj[step].size() == 0) continue;
            const Node& n = nodes[step];
            const Mat& g = adj[step];
            const Mat* gd = second ? &adj_dot[step] : nullptr;
            switch (n.kind) {
            case OpKind::input:
                break;
            case OpKind::param:
                grad_block(grad_out, n.offset, n.rows, n.cols) += g;
                if (second) grad_block(*hvp_out, n.offset, n.rows, n.cols) += *gd;
                break;
            case OpKind::linear: {
                const Mat& x = nodes[n.a].value;
                const auto w = tape.weight(n);
                grad_block(grad_out, n.offset, n.rows, n.cols).noalias() += g.transpose() * x;
                Eigen::Map<Vec>(grad_out.data() + n.offset + n.rows * n.cols, static_cast<Eigen::Index>(n.rows)) +=
                    g.colwise().sum().transpose();
                accumulate(adj[n.a], g * w);
                if (second) {
                    const Eigen::Map<const RowMat> w_dot(v->data() + n.offset, static_cast<Eigen::Index>(n.rows),
                                                         static_cast<Eigen::Index>(n.cols));
                    auto h = grad_block(*hvp_out, n.offset, n.rows, n.cols);
                    h.noalias() += gd->transpose() * x;
                    h.noalias() += g.transpose() * (*dot)[n.a];
                    Eigen::Map<Vec>(hvp_out->data() + n.offset + n.rows * n.cols, static_cast<Eigen::Index>(n.rows)) +=
                        gd->colwise().sum().transpose();
                    Mat ad = (*gd) * w;
                    ad.noalias() += g * w_dot;
                    accumulate(adj_dot[n.a], ad);
                }
                break;
            }
            case OpKind::tanh: {
                const Eigen::ArrayXXd deriv = 1.0 - n.value.array().square();
                accumulate(adj[n.a], (g.array() * deriv).matrix());
                if (second) {
                    const Eigen::ArrayXXd deriv_dot = -2.0 * n.value.array() * (*dot)[step].array();
                    accumulate(adj_dot[n.a], (gd->array() * deriv + g.array() * deriv_dot).matrix());
                }
                break;
            }
            case OpKind::log_softmax: {
                const Mat p = n.value.array().exp().matrix();
                const Vec gsum = g.rowwise().sum();
                accumulate(adj[n.a], (g.array() - p.array().colwise() * gsum.array()).matrix());
                if (second) {
                    const Mat p_dot = (p.array() * (*dot)[step].array()).matrix();
                    const Vec gdsum = gd->rowwise().sum();
                    Mat ad = *gd;
                    ad.array() -= p.array().colwise() * gdsum.array();
                    ad.array() -= p_dot.array().colwise() * gsum.array();
                    accumulate(adj_dot[n.a], ad);
                }
                break;
            }
            case OpKind::gaussian_logp: {
                const Eigen::Map<const Vec> log_std(tape.params_.data() + n.offset, static_cast<Eigen::Index>(n.cols));
                const Eigen::ArrayXd inv_std = (-log_std.array()).exp();
                const Eigen::ArrayXd inv_var = inv_std.square();
                const Eigen::ArrayXXd diff = (n.constant - nodes[n.a].value).array();
                const Eigen::ArrayXXd z = diff.rowwise() * inv_std.transpose();
                const Eigen::ArrayXd gcol = g.col(0).array();
                // d/dmean = diff / var ; d/dlog_std = z^2 - 1
                accumulate(adj[n.a], ((diff.rowwise() * inv_var.transpose()).colwise() * gcol).matrix());
                Eigen::Map<Vec>(grad_out.data() + n.offset, static_cast<Eigen::Index>(n.cols)) +=
                    ((z.square() - 1.0).colwise() * gcol).colwise().sum().transpose().matrix();
                if (second) {
                    const Eigen::Map<const Vec> s_dot(v->data() + n.offset, static_cast<Eigen::Index>(n.cols));
                    const Eigen::ArrayXXd mean_dot = (*dot)[n.a].array();
                    const Eigen::ArrayXd gdcol = gd->col(0).array();
                    // tangent of diff/var = (-mean_dot - 2 diff s_dot) / var
                    const Eigen::ArrayXXd dmean_dot =
                        ((-mean_dot) - 2.0 * (diff.rowwise() * s_dot.array().transpose())).rowwise() *
                        inv_var.transpose();
                    Eigen::ArrayXXd ad = (diff.rowwise() * inv_var.transpose()).colwise() * gdcol;
                    ad += dmean_dot.colwise() * gcol;
                    accumulate(adj_dot[n.a], ad.matrix());
                    // tangent of z = (-mean_dot)/std - z s_dot
                    const Eigen::ArrayXXd z_dot =
                        ((-mean_dot).rowwise() * inv_std.transpose()) - (z.rowwise() * s_dot.array().transpose());
                    Eigen::ArrayXXd hs = (z.square() - 1.0).colwise() * gdcol;
                    hs += (2.0 * z * z_dot).colwise() * gcol;
                    Eigen::Map<Vec>(hvp_out->data() + n.offset, static_cast<Eigen::Index>(n.cols)) +=
                        hs.colwise().sum().transpose().matrix();
                }
                break;
            }
            case OpKind::weighted_sum:
                accumulate(adj[n.a], g(0, 0) * n.constant);
                if (second) accumulate(adj_dot[n.a], (*gd)(0, 0) * n.constant);
                break;
            case OpKind::mul:
                accumulate(adj[n.a], (g.array() * nodes[n.b].value.array()).matrix());
                accumulate(adj[n.b], (g.array() * nodes[n.a].value.array()).matrix());
                if (second) {
                    accumulate(adj_dot[n.a], (gd->array() * nodes[n.b].value.array() +
                                              g.array() * (*dot)[n.b].array()).matrix());
                    accumulate(adj_dot[n.b], (gd->array() * nodes[n.a].value.array() +
                                              g.array() * (*dot)[n.a].array()).matrix());
                }
                break;
            case OpKind::sum: {
                const auto& x = nodes[n.a].value;
                accumulate(adj[n.a], Mat::Constant(x.rows(), x.cols(), g(0, 0)));
                if (second) accumulate(adj_dot[n.a], Mat::Constant(x.rows(), x.cols(), (*gd)(0, 0)));
                break;
            }
            case OpKind::affine:
                accumulate(adj[n.a], n.scale * g);
                if (second) accumulate(adj_dot[n.a], n.scale * (*gd));
                break;
            }
        }
    }
};

/// d(seed . node)/d(params), where seed has the node's shape.
inline ParamVector grad(const GradTape& tape, NodeId node, const Mat& seed) {
    const Mat& v = tape.value(node);
    if (seed.rows() != v.rows() || seed.cols() != v.cols())
        throw ConfigError("grad: seed shape " + std::to_string(seed.rows()) + "x" + std::to_string(seed.cols()) +
                          " does not match output " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
    ParamVector g = ParamVector::Zero(tape.params().size());
    TapeSweeps::reverse(tape, node, seed, nullptr, nullptr, g, nullptr);
    return g;
}

/// Gradient with respect to the tape's last recorded node.
inline ParamVector grad(const GradTape& tape, const Mat& seed) { return grad(tape, tape.output(), seed); }

/// Gradient of a scalar node.
inline ParamVector grad(const GradTape& tape, NodeId scalar_node) {
    expects(tape.value(scalar_node).size() == 1, "grad without seed requires a scalar node");
    return grad(tape, scalar_node, Mat::Constant(1, 1, 1.0));
}

/// Directional derivative of `node` along parameter direction v.
inline Mat jvp(const GradTape& tape, NodeId node, const ParamVector& v) {
    if (v.size() != tape.params().size()) throw ConfigError("jvp: direction length mismatch");
    auto dot = TapeSweeps::tangents(tape, node, v);
    return std::move(dot[node]);
}

struct HvpResult {
    ParamVector gradient;
    ParamVector hvp;
};

/// Hessian-vector product of a recorded scalar objective, forward-over-reverse.
inline HvpResult hvp_with_grad(const GradTape& tape, NodeId objective, const ParamVector& v) {
    expects(tape.value(objective).size() == 1, "hvp requires a scalar objective");
    if (v.size() != tape.params().size()) throw ConfigError("hvp: direction length mismatch");
    const auto dot = TapeSweeps::tangents(tape, objective, v);
    HvpResult r{ParamVector::Zero(v.size()), ParamVector::Zero(v.size())};
    TapeSweeps::reverse(tape, objective, Mat::Constant(1, 1, 1.0), &v, &dot, r.gradient, &r.hvp);
    return r;
}

inline ParamVector hvp(const GradTape& tape, NodeId objective, const ParamVector& v) {
    return hvp_with_grad(tape, objective, v).hvp;
}

}  // namespace irpo
