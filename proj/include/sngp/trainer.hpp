#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sngp/datasets.hpp"
#include "sngp/model.hpp"

namespace sngp {

struct TrainerConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    /// τ: the output weights carry the penalty ||β||² / (2τ).
    double prior_variance = 1.0;
    std::uint64_t seed = 0;
    /// Update only the output weights during the final epoch.
    bool freeze_final_epoch = false;
};

struct TrainingLog {
    /// Mean minibatch objective per epoch.
    std::vector<double> epoch_loss;
    std::size_t steps = 0;
};

/// Loss value and ∂loss/∂logits for a batch, with the probabilities used
/// for precision accumulation (n × 1 for binary, n × K for multiclass).
struct LossEval {
    double loss = 0.0;  // mean over the batch
    Matrix grad;        // already divided by the batch size
    Matrix probs;
};

/// Squared loss ½(y − g)², sigmoid or softmax cross-entropy.
LossEval evaluate_loss(const Matrix& logits, std::span<const double> labels, Likelihood likelihood);

/// Minibatch SGD with momentum on the MAP objective
///   Σ_i loss_i + ||β||² / (2τ),
/// scaled by 1/N. Spectral normalization runs after every step on constrained
/// blocks. For a GP head the precision matrix is rebuilt during the final
/// epoch and inverted at the end. Throws DivergenceDetected when the loss
/// becomes non-finite.
TrainingLog train_map(Model& model, const LabeledSet& data, const TrainerConfig& config);

}  // namespace sngp
