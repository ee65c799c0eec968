#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sngp/linalg.hpp"
#include "sngp/spectral_norm.hpp"

namespace sngp {

enum class Activation { relu, identity };

/// h ← h + dropout(act(h·W + b)). Weights use the row-vector convention
/// (in × out), so a batch H (n × D) maps to H·W.
struct ResidualBlock {
    Matrix weight;  // D × D
    Vector bias;    // D
    std::optional<SpectralConstraint> constraint;
};

/// Trainable dense map from the input dimension to the hidden width.
struct DenseLayer {
    Matrix weight;  // in × out
    Vector bias;    // out
};

struct NetworkShape {
    std::size_t input_dim = 2;
    std::size_t hidden_dim = 128;
    std::size_t num_blocks = 12;
    /// Without a projection the blocks act directly on the input, which then
    /// must have hidden_dim columns.
    bool input_projection = true;
    Activation activation = Activation::relu;
    double dropout_rate = 0.0;
    /// Spectral norm bound c; empty for an unconstrained network.
    std::optional<double> spec_norm_bound;
    std::size_t power_iterations = 1;
    /// Standard deviation of block weights is block_init_scale / sqrt(D).
    double block_init_scale = 1.0;
};

class ResidualNetwork {
public:
    ResidualNetwork() = default;
    /// Random initialization; every layer draws from its own split of `seed`.
    ResidualNetwork(const NetworkShape& shape, std::uint64_t seed);

    const NetworkShape& shape() const { return shape_; }
    std::size_t input_dim() const { return shape_.input_dim; }
    std::size_t output_dim() const { return shape_.hidden_dim; }
    double dropout_rate() const { return shape_.dropout_rate; }
    Activation activation() const { return shape_.activation; }

    std::optional<DenseLayer>& input_proj() { return input_proj_; }
    const std::optional<DenseLayer>& input_proj() const { return input_proj_; }
    std::vector<ResidualBlock>& blocks() { return blocks_; }
    const std::vector<ResidualBlock>& blocks() const { return blocks_; }

    /// Applies spectral normalization to every constrained block.
    void apply_spectral_constraints();

private:
    NetworkShape shape_;
    std::optional<DenseLayer> input_proj_;
    std::vector<ResidualBlock> blocks_;
};

/// Intermediate values recorded by forward() for backward().
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> block_inputs;
    std::vector<Matrix> pre_activations;
    /// Per-block dropout masks already scaled by 1/(1-rate); empty when no
    /// dropout was applied.
    std::vector<Matrix> dropout_masks;
};

/// Penultimate features h(x), n × D. Dropout is applied only when
/// `dropout_rng` is given (training or MC-dropout prediction).
Matrix forward(const ResidualNetwork& net, const Matrix& x, Rng* dropout_rng = nullptr,
               ForwardCache* cache = nullptr);

struct NetworkGradients {
    std::optional<DenseLayer> input_proj;
    std::vector<Matrix> block_weights;
    std::vector<Vector> block_biases;
};

/// Gradients of a loss with respect to every parameter given ∂loss/∂h(x).
NetworkGradients backward(const ResidualNetwork& net, const ForwardCache& cache,
                          const Matrix& upstream_grad);

/// Zero-initialized gradient buffers with the network's shapes.
NetworkGradients zero_gradients(const ResidualNetwork& net);

}  // namespace sngp
