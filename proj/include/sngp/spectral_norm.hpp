#pragma once

#include <cstddef>

#include "sngp/linalg.hpp"

namespace sngp {

/// Power-iteration state and norm bound for one weight matrix.
///
/// `u` (length rows) and `v` (length cols) persist between calls so that a
/// single iteration per training step tracks the slowly moving top singular
/// pair.
struct SpectralConstraint {
    double bound = 1.0;
    std::size_t power_iters = 1;
    Vector u;
    Vector v;
    double last_estimate = 0.0;

    /// Unit-normalized Gaussian u, v drawn from `rng`.
    static SpectralConstraint init(std::size_t rows, std::size_t cols, double bound,
                                   std::size_t power_iters, Rng& rng);
};

/// Runs `state.power_iters` power-iteration steps on `w` and returns the
/// estimate uᵀ W v of the largest singular value. Throws ZeroMatrix when `w`
/// annihilates the iterate.
double estimate_norm(const Matrix& w, SpectralConstraint& state);

/// Estimates the norm, then returns c·W/λ̂ if c < λ̂ and W otherwise.
Matrix apply(const Matrix& w, SpectralConstraint& state);

/// In-place variant of apply(); returns the estimate used.
double normalize_in_place(Matrix& w, SpectralConstraint& state);

}  // namespace sngp
