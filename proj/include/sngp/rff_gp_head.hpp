#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "sngp/linalg.hpp"

namespace sngp {

/// Output likelihood of a model. Binary and regression heads carry a single
/// output column; multiclass heads carry one column per class.
enum class Likelihood { regression, binary, multiclass };

std::string to_string(Likelihood l);
Likelihood likelihood_from_string(const std::string& s);

/// How accumulate_precision() folds a batch into the precision matrix.
///
/// exact:          P ← P + Σ_i w_i Φ_i Φ_iᵀ, starting from I/τ.
/// moving_average: P ← m·P + (1−m)·Σ_i w_i Φ_i Φ_iᵀ, starting from s·I.
struct PrecisionUpdateMode {
    enum class Kind { exact, moving_average };
    Kind kind = Kind::exact;
    double ridge = 0.001;
    double discount = 0.999;
};

struct RffGpOptions {
    std::size_t input_dim = 128;     // D_{L-1}
    std::size_t num_features = 1024;  // D_L
    std::size_t num_outputs = 1;
    double amplitude = 1.0;          // σ²
    double length_scale = 2.0;       // l
    double prior_variance = 1.0;     // τ
    std::uint64_t seed = 0;
    PrecisionUpdateMode precision_mode{};
    /// Frozen Gaussian projection of the inputs to this width before the
    /// random features; 0 disables it.
    std::size_t input_projection_dim = 0;
    /// Parameter-free layer normalization of the inputs.
    bool input_layer_norm = false;
};

/// Random-feature Gaussian process output layer with a Laplace posterior
/// over the output weights β.
///
/// The random projection W_L (D_L × D') and phases b_L are regenerated from
/// `options().seed` and never change. Inputs are divided by the length scale
/// before the projection, so Φ(h)Φ(h')ᵀ ≈ σ² exp(−‖h − h'‖² / (2l²)).
class RffGpHead {
public:
    RffGpHead() = default;
    explicit RffGpHead(const RffGpOptions& options);

    const RffGpOptions& options() const { return options_; }
    std::size_t num_features() const { return options_.num_features; }
    std::size_t num_outputs() const { return options_.num_outputs; }
    std::size_t input_dim() const { return options_.input_dim; }

    const Matrix& projection() const { return projection_; }
    const Vector& phases() const { return phases_; }
    const Matrix& input_projection() const { return input_projection_; }

    Matrix& beta() { return beta_; }
    const Matrix& beta() const { return beta_; }

    /// Allocated on first use, so heads used only for features stay cheap
    /// at large D_L.
    const Matrix& precision() const;
    const std::optional<Matrix>& covariance() const { return covariance_; }
    bool finalized() const { return covariance_.has_value(); }

    /// Amplitude used for predictive variances. Equal to the training
    /// amplitude until calibrate_amplitude() is called; the variance scales
    /// by calibrated/training amplitude.
    double calibrated_amplitude() const { return calibrated_amplitude_; }
    void set_calibrated_amplitude(double amplitude);

    /// Φ = √(2σ²/D_L) · cos(−W_L (h/l) + b_L), n × D_L.
    Matrix features(const Matrix& h) const;
    /// Posterior-mean logits Φβ, n × K.
    Matrix logits(const Matrix& phi) const;

    /// Features together with ∂Φ/∂h data needed to backpropagate.
    struct FeatureCache {
        Matrix input;       // h as given
        Matrix normalized;  // after optional layer norm
        Vector inv_std;     // per-row 1/std from layer norm
        Matrix projected;   // after optional input projection
        Matrix phase;       // −W_L (h/l) + b_L
    };
    Matrix features(const Matrix& h, FeatureCache& cache) const;
    /// ∂loss/∂h from ∂loss/∂Φ.
    Matrix features_backward(const FeatureCache& cache, const Matrix& grad_phi) const;

    /// Resets the precision to its prior value (I/τ or s·I) and drops any
    /// covariance.
    void reset_precision();

    /// Folds one batch into the precision matrix. `probs` holds the model's
    /// probabilities at the current MAP estimate: n × 1 (binary, P(y=1)),
    /// n × K (multiclass; weights use the max class probability), ignored for
    /// regression. Throws AlreadyFinalized.
    void accumulate_precision(const Matrix& phi, const Matrix& probs, Likelihood likelihood);

    /// Inverts the precision matrix into the posterior covariance.
    const Matrix& finalize();

    /// v(x) = φ(x)ᵀ Σ̂ φ(x) per row, scaled by the amplitude calibration.
    /// Throws NotFinalized.
    Vector predictive_variance(const Matrix& phi) const;

    /// Restores state when loading a saved model.
    void restore(Matrix beta, Matrix precision, std::optional<Matrix> covariance, double calibrated_amplitude);

private:
    RffGpOptions options_;
    Matrix projection_;        // D_L × D'
    Vector phases_;            // D_L
    Matrix input_projection_;  // D_{L-1} × D' (empty when disabled)
    Matrix beta_;              // D_L × K
    mutable Matrix precision_;  // D_L × D_L; empty until first use
    std::optional<Matrix> covariance_;
    double calibrated_amplitude_ = 1.0;

    Matrix& materialized_precision() const;
};

/// Per-example precision weights w_i used by accumulate_precision().
Vector precision_weights(const Matrix& probs, Likelihood likelihood, std::size_t n);

}  // namespace sngp
