#include "sngp/residual_net.hpp"

#include <cmath>

namespace sngp {

namespace {

constexpr std::uint64_t kProjectionStream = 1000;
constexpr std::uint64_t kBlockStream = 2000;
constexpr std::uint64_t kConstraintStream = 3000;

void add_bias(Matrix& m, std::span<const double> bias) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias[j];
    }
}

Vector column_sums(const Matrix& m) {
    Vector s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s[j] += r[j];
    }
    return s;
}

}  // namespace

ResidualNetwork::ResidualNetwork(const NetworkShape& shape, std::uint64_t seed) : shape_(shape) {
    if (shape.hidden_dim == 0) throw InvalidRange("ResidualNetwork: hidden_dim must be >= 1");
    if (!(shape.dropout_rate >= 0.0 && shape.dropout_rate < 1.0))
        throw InvalidRange("ResidualNetwork: dropout_rate must be in [0, 1)");
    if (!shape.input_projection && shape.input_dim != shape.hidden_dim)
        throw ShapeMismatch("ResidualNetwork: residual blocks need input_dim == hidden_dim without a projection");

    const Rng root(seed);
    const std::size_t d = shape.hidden_dim;
    if (shape.input_projection) {
        Rng rng = root.split(kProjectionStream);
        Matrix w = sample_gaussian(rng, shape.input_dim, d);
        w *= 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
        input_proj_ = DenseLayer{std::move(w), Vector(d, 0.0)};
    }
    blocks_.reserve(shape.num_blocks);
    for (std::size_t l = 0; l < shape.num_blocks; ++l) {
        Rng rng = root.split(kBlockStream + l);
        Matrix w = sample_gaussian(rng, d, d);
        w *= shape.block_init_scale / std::sqrt(static_cast<double>(d));
        ResidualBlock block{std::move(w), Vector(d, 0.0), std::nullopt};
        if (shape.spec_norm_bound) {
            Rng crng = root.split(kConstraintStream + l);
            block.constraint =
                SpectralConstraint::init(d, d, *shape.spec_norm_bound, shape.power_iterations, crng);
        }
        blocks_.push_back(std::move(block));
    }
    apply_spectral_constraints();
}

void ResidualNetwork::apply_spectral_constraints() {
    for (auto& block : blocks_)
        if (block.constraint) normalize_in_place(block.weight, *block.constraint);
}

Matrix forward(const ResidualNetwork& net, const Matrix& x, Rng* dropout_rng, ForwardCache* cache) {
    if (x.cols() != net.input_dim())
        throw ShapeMismatch("forward: expected " + std::to_string(net.input_dim()) + " input columns, got " +
                            std::to_string(x.cols()));
    Matrix h;
    if (net.input_proj()) {
        h = matmul(x, net.input_proj()->weight);
        add_bias(h, net.input_proj()->bias);
    } else {
        h = x;
    }
    const bool drop = dropout_rng != nullptr && net.dropout_rate() > 0.0;
    const double keep = 1.0 - net.dropout_rate();
    if (cache) {
        cache->input = x;
        cache->block_inputs.clear();
        cache->pre_activations.clear();
        cache->dropout_masks.clear();
    }
    for (const auto& block : net.blocks()) {
        Matrix z = matmul(h, block.weight);
        add_bias(z, block.bias);
        Matrix a = z;
        if (net.activation() == Activation::relu)
            for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
        Matrix mask;
        if (drop) {
            mask = Matrix(a.rows(), a.cols());
            for (double& m : mask.data()) m = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= mask.data()[i];
        }
        if (cache) {
            cache->block_inputs.push_back(h);
            cache->pre_activations.push_back(std::move(z));
            if (drop) cache->dropout_masks.push_back(std::move(mask));
        }
        h += a;
    }
    return h;
}

NetworkGradients zero_gradients(const ResidualNetwork& net) {
    NetworkGradients g;
    if (net.input_proj())
        g.input_proj = DenseLayer{Matrix(net.input_proj()->weight.rows(), net.input_proj()->weight.cols()),
                                  Vector(net.input_proj()->bias.size(), 0.0)};
    for (const auto& block : net.blocks()) {
        g.block_weights.emplace_back(block.weight.rows(), block.weight.cols());
        g.block_biases.emplace_back(block.bias.size(), 0.0);
    }
    return g;
}

NetworkGradients backward(const ResidualNetwork& net, const ForwardCache& cache, const Matrix& upstream_grad) {
    const std::size_t n_blocks = net.blocks().size();
    if (cache.block_inputs.size() != n_blocks) throw ShapeMismatch("backward: cache does not match network");
    if (upstream_grad.rows() != cache.input.rows() || upstream_grad.cols() != net.output_dim())
        throw ShapeMismatch("backward: upstream gradient shape");
    const bool dropped = !cache.dropout_masks.empty();

    NetworkGradients grads = zero_gradients(net);
    Matrix g = upstream_grad;
    for (std::size_t l = n_blocks; l-- > 0;) {
        const auto& block = net.blocks()[l];
        Matrix dz = g;
        if (dropped)
            for (std::size_t i = 0; i < dz.size(); ++i) dz.data()[i] *= cache.dropout_masks[l].data()[i];
        if (net.activation() == Activation::relu) {
            const auto& z = cache.pre_activations[l];
            for (std::size_t i = 0; i < dz.size(); ++i)
                if (!(z.data()[i] > 0.0)) dz.data()[i] = 0.0;
        }
        grads.block_weights[l] = matmul_tn(cache.block_inputs[l], dz);
        grads.block_biases[l] = column_sums(dz);
        g += matmul_nt(dz, block.weight);
    }
    if (net.input_proj()) {
        grads.input_proj->weight = matmul_tn(cache.input, g);
        grads.input_proj->bias = column_sums(g);
    }
    return grads;
}

}  // namespace sngp
