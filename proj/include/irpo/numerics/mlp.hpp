#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"
#include "irpo/numerics/tape.hpp"

namespace irpo {

enum class Activation { tanh };

/// Fully connected tanh network. Layer l occupies (in_l + 1) * out_l entries
/// of the flat parameter vector: a row-major (out x in) weight block followed
/// by the out-length bias.
struct MlpSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 1;
    Activation activation = Activation::tanh;

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims{input_dim};
        dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
        dims.push_back(output_dim);
        return dims;
    }

    std::size_t param_count() const {
        const auto dims = layer_dims();
        std::size_t m = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) m += (dims[l] + 1) * dims[l + 1];
        return m;
    }

    /// Offset of layer l's weight block.
    std::size_t layer_offset(std::size_t layer) const {
        const auto dims = layer_dims();
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += (dims[l] + 1) * dims[l + 1];
        return off;
    }

    void validate() const {
        if (input_dim < 1 || output_dim < 1) throw ConfigError("MlpSpec: dimensions must be >= 1");
        for (auto h : hidden_dims)
            if (h < 1) throw ConfigError("MlpSpec: hidden dimensions must be >= 1");
    }
};

struct MlpOutput {
    GradTape tape;
    NodeId output;
    const Mat& value() const { return tape.value(output); }
};

/// Records the network on a fresh tape. `input` is batch x input_dim.
inline MlpOutput mlp_forward(const MlpSpec& spec, const ParamVector& params, const Mat& input) {
    spec.validate();
    if (static_cast<std::size_t>(params.size()) != spec.param_count())
        throw ConfigError("mlp_forward: expected " + std::to_string(spec.param_count()) + " parameters, got " +
                          std::to_string(params.size()));
    if (static_cast<std::size_t>(input.cols()) != spec.input_dim)
        throw ConfigError("mlp_forward: expected input width " + std::to_string(spec.input_dim) + ", got " +
                          std::to_string(input.cols()));
    GradTape tape(params);
    const auto dims = spec.layer_dims();
    NodeId h = tape.input(input);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        h = tape.linear(h, offset, dims[l + 1], dims[l]);
        offset += (dims[l] + 1) * dims[l + 1];
        if (l + 2 < dims.size()) h = tape.tanh(h);
    }
    return {std::move(tape), h};
}

/// Gaussian weights with std gain / sqrt(fan_in), zero biases. The last layer
/// uses `output_gain` instead so policies start near uniform.
inline ParamVector init_mlp(const MlpSpec& spec, Rng& rng, double gain = 1.0, double output_gain = 1.0) {
    spec.validate();
    ParamVector p = ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count()));
    const auto dims = spec.layer_dims();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const bool last = l + 2 == dims.size();
        const double scale = (last ? output_gain : gain) / std::sqrt(static_cast<double>(dims[l]));
        for (std::size_t i = 0; i < dims[l] * dims[l + 1]; ++i) p[static_cast<Eigen::Index>(offset + i)] = scale * normal(rng);
        offset += (dims[l] + 1) * dims[l + 1];
    }
    return p;
}

}  // namespace irpo
