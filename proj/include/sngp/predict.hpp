#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>

#include "sngp/datasets.hpp"
#include "sngp/linalg.hpp"
#include "sngp/model.hpp"

namespace sngp {

/// Posterior logit moments and class probabilities for a batch.
///
/// `variance` is the shared per-example logit variance (zero for dense
/// heads). Binary models carry one logit column but two probability columns
/// (P(y=0), P(y=1)); regression models leave `probs` empty.
struct PredictivePosterior {
    Matrix mean_logits;
    Vector variance;
    Matrix probs;
    std::size_t members = 1;
};

struct PredictConfig {
    enum class Mode { mean_field, mc };
    Mode mode = Mode::mean_field;
    double lambda = std::numbers::pi / 8.0;
    std::size_t mc_samples = 1000;
    /// Stochastic forward passes with dropout active; 0 means a single
    /// deterministic pass.
    std::size_t dropout_passes = 0;
    std::uint64_t seed = 0;
};

Matrix softmax(const Matrix& logits);
double sigmoid(double x);

/// softmax(m / √(1 + λ·v)) row-wise. A single logit column uses the sigmoid
/// analogue and returns two probability columns.
Matrix mean_field(const Matrix& mean_logits, std::span<const double> variance, double lambda);

/// Average of softmax (sigmoid for one column) over `samples` Gaussian draws
/// N(m, v·I) of the logits.
Matrix mc_softmax(const Matrix& mean_logits, std::span<const double> variance, std::size_t samples, Rng& rng);

/// Member-wise mean of probabilities, logit means and variances.
PredictivePosterior ensemble_average(std::span<const PredictivePosterior> members);

/// Single forward pass; variance from the GP head when present. Inputs are
/// raw (the model's normalization is applied here).
PredictivePosterior predict(const Model& model, const Matrix& raw_inputs, const PredictConfig& config = {});

/// Averages mean-field predictions over `passes` forward passes with dropout
/// active.
PredictivePosterior mc_dropout_predict(const Model& model, const Matrix& raw_inputs, std::size_t passes, Rng& rng,
                                       double lambda = std::numbers::pi / 8.0);

/// Log-spaced grid of `points` amplitudes on [lo, hi].
Vector amplitude_grid(double lo = 0.01, double hi = 50.0, std::size_t points = 30);

struct AmplitudeFit {
    double amplitude = 1.0;
    double nll = 0.0;
    Vector grid;
    Vector grid_nll;
};

/// Picks the GP head's variance amplitude minimizing held-out NLL over the
/// grid and stores it in the head. Requires a finalized classification head.
AmplitudeFit calibrate_amplitude(Model& model, const LabeledSet& validation, const PredictConfig& config = {},
                                 std::span<const double> grid = {});

}  // namespace sngp
