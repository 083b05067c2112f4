#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "irpo/errors.hpp"

namespace irpo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Flat vector holding every parameter of one network. Layer views are
/// computed on demand by offset, never copied out.
using ParamVector = Vec;

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, index). Streams never overlap in
/// practice because seed_seq mixes all three words.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
    return Rng(seq);
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

inline void require_finite(const Eigen::Ref<const Mat>& m, const std::string& what) {
    if (!m.allFinite()) throw NumericalError("non-finite values in " + what);
}

inline double relative_error(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

}  // namespace irpo
