#include "sngp/spectral_norm.hpp"

#include <cmath>

namespace sngp {

namespace {

void normalize_or_throw(Vector& x) {
    const double n = norm2(x);
    if (!(n > 0.0) || !std::isfinite(n)) throw ZeroMatrix("estimate_norm: power iterate vanished");
    for (double& e : x) e /= n;
}

Vector transpose_times(const Matrix& w, std::span<const double> u) {
    Vector out(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double ui = u[i];
        const auto r = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) out[j] += ui * r[j];
    }
    return out;
}

}  // namespace

SpectralConstraint SpectralConstraint::init(std::size_t rows, std::size_t cols, double bound,
                                            std::size_t power_iters, Rng& rng) {
    if (!(bound > 0.0)) throw InvalidRange("SpectralConstraint: bound must be positive");
    if (power_iters == 0) throw InvalidRange("SpectralConstraint: power_iters must be >= 1");
    SpectralConstraint s;
    s.bound = bound;
    s.power_iters = power_iters;
    s.u.resize(rows);
    s.v.resize(cols);
    for (double& x : s.u) x = rng.normal();
    for (double& x : s.v) x = rng.normal();
    normalize_or_throw(s.u);
    normalize_or_throw(s.v);
    return s;
}

double estimate_norm(const Matrix& w, SpectralConstraint& state) {
    if (state.u.size() != w.rows() || state.v.size() != w.cols())
        throw ShapeMismatch("estimate_norm: power-iteration vectors do not match the weight");
    for (std::size_t it = 0; it < state.power_iters; ++it) {
        state.v = transpose_times(w, state.u);
        normalize_or_throw(state.v);
        state.u = matvec(w, state.v);
        normalize_or_throw(state.u);
    }
    state.last_estimate = dot(state.u, matvec(w, state.v));
    return state.last_estimate;
}

double normalize_in_place(Matrix& w, SpectralConstraint& state) {
    const double lambda = estimate_norm(w, state);
    if (state.bound < lambda) w *= state.bound / lambda;
    return lambda;
}

Matrix apply(const Matrix& w, SpectralConstraint& state) {
    Matrix out = w;
    normalize_in_place(out, state);
    return out;
}

}  // namespace sngp
