#include "sngp/rff_gp_head.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sngp {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr std::uint64_t kProjectionStream = 0;
constexpr std::uint64_t kPhaseStream = 1;
constexpr std::uint64_t kInputProjectionStream = 2;

}  // namespace

std::string to_string(Likelihood l) {
    switch (l) {
        case Likelihood::regression: return "regression";
        case Likelihood::binary: return "binary";
        case Likelihood::multiclass: return "multiclass";
    }
    return "unknown";
}

Likelihood likelihood_from_string(const std::string& s) {
    if (s == "regression") return Likelihood::regression;
    if (s == "binary") return Likelihood::binary;
    if (s == "multiclass") return Likelihood::multiclass;
    throw InvalidRange("unknown likelihood '" + s + "'");
}

RffGpHead::RffGpHead(const RffGpOptions& options) : options_(options) {
    if (options.num_features == 0 || options.input_dim == 0 || options.num_outputs == 0)
        throw InvalidRange("RffGpHead: dimensions must be positive");
    if (!(options.amplitude > 0.0) || !(options.length_scale > 0.0) || !(options.prior_variance > 0.0))
        throw InvalidRange("RffGpHead: amplitude, length_scale and prior_variance must be positive");
    const auto& pm = options.precision_mode;
    if (pm.kind == PrecisionUpdateMode::Kind::moving_average &&
        (!(pm.ridge > 0.0) || !(pm.discount > 0.0 && pm.discount < 1.0)))
        throw InvalidRange("RffGpHead: moving average needs ridge > 0 and discount in (0, 1)");

    const Rng root(options.seed);
    std::size_t proj_in = options.input_dim;
    if (options.input_projection_dim > 0) {
        Rng rng = root.split(kInputProjectionStream);
        input_projection_ = sample_gaussian(rng, options.input_dim, options.input_projection_dim);
        input_projection_ *= 1.0 / std::sqrt(static_cast<double>(options.input_projection_dim));
        proj_in = options.input_projection_dim;
    }
    Rng wrng = root.split(kProjectionStream);
    projection_ = sample_gaussian(wrng, options.num_features, proj_in);
    Rng brng = root.split(kPhaseStream);
    phases_ = sample_uniform(brng, options.num_features, 0.0, 2.0 * std::numbers::pi);
    beta_ = Matrix(options.num_features, options.num_outputs);
    calibrated_amplitude_ = options.amplitude;
    reset_precision();
}

void RffGpHead::set_calibrated_amplitude(double amplitude) {
    if (!(amplitude > 0.0)) throw InvalidRange("calibrated amplitude must be positive");
    calibrated_amplitude_ = amplitude;
}

Matrix RffGpHead::features(const Matrix& h) const {
    FeatureCache cache;
    return features(h, cache);
}

Matrix RffGpHead::features(const Matrix& h, FeatureCache& cache) const {
    if (h.cols() != options_.input_dim)
        throw ShapeMismatch("rff_features: expected " + std::to_string(options_.input_dim) + " columns, got " +
                            std::to_string(h.cols()));
    cache.input = h;
    cache.normalized = h;
    cache.inv_std.clear();
    if (options_.input_layer_norm) {
        cache.inv_std.resize(h.rows());
        const double d = static_cast<double>(h.cols());
        for (std::size_t i = 0; i < h.rows(); ++i) {
            auto r = cache.normalized.row(i);
            double mean = 0.0;
            for (double v : r) mean += v;
            mean /= d;
            double var = 0.0;
            for (double v : r) var += (v - mean) * (v - mean);
            var /= d;
            const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
            for (double& v : r) v = (v - mean) * inv;
            cache.inv_std[i] = inv;
        }
    }
    cache.projected = options_.input_projection_dim > 0 ? matmul(cache.normalized, input_projection_)
                                                        : cache.normalized;

    const std::size_t n = h.rows(), dl = options_.num_features;
    const double inv_l = 1.0 / options_.length_scale;
    const double scale = std::sqrt(2.0 * options_.amplitude / static_cast<double>(dl));
    cache.phase = Matrix(n, dl);
    Matrix phi(n, dl);
    for (std::size_t i = 0; i < n; ++i) {
        const auto hi = cache.projected.row(i);
        for (std::size_t j = 0; j < dl; ++j) {
            const double p = -dot(projection_.row(j), hi) * inv_l + phases_[j];
            cache.phase(i, j) = p;
            phi(i, j) = scale * std::cos(p);
        }
    }
    return phi;
}

Matrix RffGpHead::features_backward(const FeatureCache& cache, const Matrix& grad_phi) const {
    const std::size_t n = grad_phi.rows(), dl = options_.num_features;
    if (grad_phi.cols() != dl || cache.phase.rows() != n) throw ShapeMismatch("features_backward: shape");
    const double inv_l = 1.0 / options_.length_scale;
    const double scale = std::sqrt(2.0 * options_.amplitude / static_cast<double>(dl));
    // ∂Φ_ij/∂h_i = scale · sin(phase_ij) · w_j / l
    Matrix g(n, dl);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dl; ++j) g(i, j) = grad_phi(i, j) * scale * std::sin(cache.phase(i, j)) * inv_l;
    Matrix grad = matmul(g, projection_);
    if (options_.input_projection_dim > 0) grad = matmul_nt(grad, input_projection_);
    if (options_.input_layer_norm) {
        const double d = static_cast<double>(grad.cols());
        for (std::size_t i = 0; i < n; ++i) {
            auto gi = grad.row(i);
            const auto yi = cache.normalized.row(i);
            double mean_g = 0.0, mean_gy = 0.0;
            for (std::size_t j = 0; j < gi.size(); ++j) {
                mean_g += gi[j];
                mean_gy += gi[j] * yi[j];
            }
            mean_g /= d;
            mean_gy /= d;
            for (std::size_t j = 0; j < gi.size(); ++j)
                gi[j] = cache.inv_std[i] * (gi[j] - mean_g - yi[j] * mean_gy);
        }
    }
    return grad;
}

Matrix RffGpHead::logits(const Matrix& phi) const {
    if (phi.cols() != options_.num_features) throw ShapeMismatch("logits: expected D_L feature columns");
    return matmul(phi, beta_);
}

void RffGpHead::reset_precision() {
    precision_ = Matrix();
    covariance_.reset();
}

Matrix& RffGpHead::materialized_precision() const {
    if (precision_.empty()) {
        const double diag = options_.precision_mode.kind == PrecisionUpdateMode::Kind::exact
                                ? 1.0 / options_.prior_variance
                                : options_.precision_mode.ridge;
        precision_ = Matrix::identity(options_.num_features) * diag;
    }
    return precision_;
}

const Matrix& RffGpHead::precision() const { return materialized_precision(); }

Vector precision_weights(const Matrix& probs, Likelihood likelihood, std::size_t n) {
    Vector w(n, 1.0);
    if (likelihood == Likelihood::regression) return w;
    if (probs.rows() != n) throw ShapeMismatch("precision_weights: probability rows");
    for (std::size_t i = 0; i < n; ++i) {
        double p;
        if (likelihood == Likelihood::binary) {
            if (probs.cols() != 1) throw ShapeMismatch("precision_weights: binary expects one column");
            p = probs(i, 0);
        } else {
            const auto r = probs.row(i);
            p = *std::max_element(r.begin(), r.end());
        }
        w[i] = p * (1.0 - p);
    }
    return w;
}

void RffGpHead::accumulate_precision(const Matrix& phi, const Matrix& probs, Likelihood likelihood) {
    if (finalized()) throw AlreadyFinalized("accumulate_precision: head already finalized");
    if (phi.cols() != options_.num_features) throw ShapeMismatch("accumulate_precision: feature columns");
    const Vector w = precision_weights(probs, likelihood, phi.rows());
    Matrix& precision = materialized_precision();
    if (options_.precision_mode.kind == PrecisionUpdateMode::Kind::exact) {
        add_weighted_gram(precision, phi, w);
    } else {
        const double m = options_.precision_mode.discount;
        Matrix batch(options_.num_features, options_.num_features);
        add_weighted_gram(batch, phi, w);
        precision *= m;
        batch *= 1.0 - m;
        precision += batch;
    }
}

const Matrix& RffGpHead::finalize() {
    covariance_ = spd_inverse(materialized_precision());
    return *covariance_;
}

Vector RffGpHead::predictive_variance(const Matrix& phi) const {
    if (!finalized()) throw NotFinalized("predictive_variance: covariance not finalized");
    if (phi.cols() != options_.num_features) throw ShapeMismatch("predictive_variance: feature columns");
    const Matrix proj = matmul(phi, *covariance_);
    const double scale = calibrated_amplitude_ / options_.amplitude;
    Vector v(phi.rows());
    for (std::size_t i = 0; i < phi.rows(); ++i) v[i] = scale * dot(proj.row(i), phi.row(i));
    return v;
}

void RffGpHead::restore(Matrix beta, Matrix precision, std::optional<Matrix> covariance,
                        double calibrated_amplitude) {
    const std::size_t dl = options_.num_features;
    if (beta.rows() != dl || beta.cols() != options_.num_outputs) throw ShapeMismatch("restore: beta shape");
    if (precision.rows() != dl || precision.cols() != dl) throw ShapeMismatch("restore: precision shape");
    if (covariance && (covariance->rows() != dl || covariance->cols() != dl))
        throw ShapeMismatch("restore: covariance shape");
    beta_ = std::move(beta);
    precision_ = std::move(precision);
    covariance_ = std::move(covariance);
    set_calibrated_amplitude(calibrated_amplitude);
}

}  // namespace sngp
